class AoIException(Exception):
    """ Base class for all AoICut exceptions. """
    pass


class ConfigError(AoIException, ValueError):
    """ Invalid configuration, distribution token, policy, or count. """
    pass


class DomainError(AoIException, ValueError):
    """ Argument outside the domain of the operation. """
    pass


class TruncationMassZero(AoIException):
    """ Cutoff leaves no probability mass below it, so every upload would be preempted. """
    pass


class QuadratureFailure(AoIException):
    """ Adaptive integration did not meet its tolerance. """
    pass


class BisectionBracketFailure(AoIException):
    """ Function does not change sign over the bisection bracket. """
    pass

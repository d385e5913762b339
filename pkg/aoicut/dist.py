import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special, stats

from aoicut import util
from .exceptions import ConfigError, DomainError, QuadratureFailure, TruncationMassZero
from .objs import BaseAoI, TruncatedAgeMoments

logger = logging.getLogger(__name__)

P_MIN = 1e-12
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
QUAD_LIMIT = 200
TAIL_MASS = 1e-12

kind_options = ["exp", "sexp", "det", "erlang"]


def _quad(func: Callable[[float], float], lo: float, hi: float, title: str = "integral") -> float:
    """ scipy ``quad`` with the package tolerances, raising when its error estimate misses them. """
    if hi <= lo:
        return 0.0
    out = integrate.quad(func, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3:
        if abserr > max(QUAD_EPSABS, QUAD_EPSREL * abs(value)):
            raise QuadratureFailure(f"{title} over [{lo}, {hi}] = {value} with error {abserr}: {out[3]}")
        logger.debug(f"quad note for {title} over [{lo}, {hi}]: {out[3]}")
    return float(value)


class ServiceDistribution(BaseAoI, ABC):
    """ Base class for service time laws ``X`` with ``X >= c`` almost surely.

        Attributes:
            shift_c (float): The largest constant ``c`` with ``X >= c`` almost surely.
            kind (str): Distribution kind, one of exp, sexp, det, or erlang.
    """
    kind = None

    @abstractmethod
    def __init__(self, shift_c: float):
        super().__init__()
        shift_c = util.parse(shift_c, attribute=None, value_type="float")
        if not 0 <= shift_c < math.inf:
            raise ConfigError(f"Invalid shift c: {shift_c}, must be finite and >= 0")
        self.shift_c = shift_c

    def __str__(self):
        return f"[{self.token}]"

    @property
    @abstractmethod
    def token(self) -> str:
        """ Config token that parses back to this distribution. """

    @abstractmethod
    def pdf(self, x: float) -> float:
        pass

    @abstractmethod
    def cdf(self, x: float) -> float:
        pass

    @abstractmethod
    def mean(self) -> float:
        pass

    @abstractmethod
    def second_moment(self) -> float:
        pass

    @abstractmethod
    def partial_moment(self, k: int, lo: float, hi: float) -> float:
        """ ``integral of y^k f_X(y) dy`` over ``[lo, hi]`` for ``k`` in 0, 1, 2. """

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """ ``size`` independent service times drawn with ``rng``. """

    def _check_gamma(self, gamma: float) -> float:
        gamma = float(gamma)
        if math.isnan(gamma) or gamma < self.shift_c:
            raise DomainError(f"Invalid cutoff gamma: {gamma}, must be >= c = {self.shift_c}")
        return gamma

    def truncation_prob(self, gamma: float) -> float:
        """ Probability ``p = P(X <= gamma)`` that an upload completes within the cutoff.

            Parameters:
                gamma (float): Cutoff time, ``math.inf`` for no cutoff.

            Returns:
                float: ``cdf(gamma)``, 1 for ``gamma = inf``.

            Raises:
                :class:`~aoicut.exceptions.DomainError`: When ``gamma < c``.
                :class:`~aoicut.exceptions.TruncationMassZero`: When ``p <= P_MIN``.
        """
        gamma = self._check_gamma(gamma)
        if math.isinf(gamma):
            return 1.0
        p = min(float(self.cdf(gamma)), 1.0)
        if p <= P_MIN:
            raise TruncationMassZero(f"P(X <= {gamma}) = {p} for {self.token}: every upload would be preempted")
        return p

    def truncated_moments(self, gamma: float) -> TruncatedAgeMoments:
        """ Moments of ``Y``, the service time conditioned on ``X <= gamma``.

            Parameters:
                gamma (float): Cutoff time, ``math.inf`` for no cutoff.

            Returns:
                :class:`~aoicut.objs.TruncatedAgeMoments`: ``p``, ``E[Y]`` and ``E[Y^2]``.

            Raises:
                :class:`~aoicut.exceptions.TruncationMassZero`: When ``p <= P_MIN``.
                :class:`~aoicut.exceptions.QuadratureFailure`: When integration misses its tolerance.
        """
        p = self.truncation_prob(gamma)
        if math.isinf(gamma):
            ey, ey2 = self.mean(), self.second_moment()
        else:
            ey = self.partial_moment(1, self.shift_c, gamma) / p
            ey2 = self.partial_moment(2, self.shift_c, gamma) / p
            ey = min(max(ey, self.shift_c), gamma)
        ey2 = max(ey2, ey * ey)
        logger.debug(f"{self.token} gamma={gamma}: p={p} E[Y]={ey} E[Y^2]={ey2}")
        return TruncatedAgeMoments(gamma, p, ey, ey2)


class ShiftedExponential(ServiceDistribution):
    """ Exponential service time shifted by a setup overhead, density ``rate * exp(-rate (x - c))`` on ``[c, inf)``.

        Parameters:
            rate (float): Rate of the exponential part.
            c (float): Shift, must be > 0.
    """
    kind = "sexp"

    def __init__(self, rate: float, c: float):
        super().__init__(c)
        self._init_rate(rate)
        if self.kind == "sexp" and self.shift_c <= 0:
            raise ConfigError(f"Invalid shift c: {self.shift_c}, must be > 0 for sexp (use exp)")
        self._loading = False

    def _init_rate(self, rate):
        rate = util.parse(rate, value_type="float")
        if not 0 < rate < math.inf:
            raise ConfigError(f"Invalid rate: {rate}, must be finite and > 0")
        self.rate = rate
        self._fields = ("rate", "shift_c")

    @property
    def token(self) -> str:
        return f"sexp:rate={self.rate!r},c={self.shift_c!r}"

    def pdf(self, x):
        if x < self.shift_c:
            return 0.0
        return self.rate * math.exp(-self.rate * (x - self.shift_c))

    def cdf(self, x):
        if x <= self.shift_c:
            return 0.0
        if math.isinf(x):
            return 1.0
        return -math.expm1(-self.rate * (x - self.shift_c))

    def mean(self):
        return self.shift_c + 1.0 / self.rate

    def second_moment(self):
        c, r = self.shift_c, self.rate
        return c * c + 2.0 * c / r + 2.0 / (r * r)

    def _excess_moment(self, j, u_lo, u_hi):
        """ ``integral of u^j rate exp(-rate u) du`` over ``[u_lo, u_hi]``. """
        scale = math.factorial(j) / self.rate ** j
        z_lo, z_hi = self.rate * u_lo, self.rate * u_hi
        if z_lo > j + 1:
            upper = 0.0 if math.isinf(z_hi) else special.gammaincc(j + 1, z_hi)
            return scale * (special.gammaincc(j + 1, z_lo) - upper)
        lower = 0.0 if z_lo <= 0 else special.gammainc(j + 1, z_lo)
        upper = 1.0 if math.isinf(z_hi) else special.gammainc(j + 1, z_hi)
        return scale * (upper - lower)

    def partial_moment(self, k, lo, hi):
        c = self.shift_c
        lo, hi = max(lo, c), hi
        if hi <= lo:
            return 0.0
        u = [self._excess_moment(j, lo - c, hi - c) for j in range(k + 1)]
        if k == 0:
            return float(u[0])
        elif k == 1:
            return float(c * u[0] + u[1])
        elif k == 2:
            return float(c * c * u[0] + 2.0 * c * u[1] + u[2])
        raise DomainError(f"Invalid moment order: {k}, must be 0, 1, or 2")

    def sample(self, rng, size):
        return self.shift_c - np.log1p(-rng.random(size)) / self.rate


class Exponential(ShiftedExponential):
    """ Exponential service time with density ``rate * exp(-rate x)`` on ``[0, inf)``.

        Parameters:
            rate (float): Rate of the exponential.
    """
    kind = "exp"

    def __init__(self, rate: float = 1.0):
        ServiceDistribution.__init__(self, 0.0)
        self._init_rate(rate)
        self._loading = False

    @property
    def token(self) -> str:
        return f"exp:rate={self.rate!r}"


class Deterministic(ServiceDistribution):
    """ Constant service time ``c``; every epoch quantity has a hand computable value.

        Parameters:
            c (float): The service time, must be > 0.
    """
    kind = "det"

    def __init__(self, c: float):
        super().__init__(c)
        if self.shift_c <= 0:
            raise ConfigError(f"Invalid shift c: {self.shift_c}, must be > 0 for det")
        self._fields = ("shift_c",)
        self._loading = False

    @property
    def token(self) -> str:
        return f"det:c={self.shift_c!r}"

    def pdf(self, x):
        return math.inf if x == self.shift_c else 0.0

    def cdf(self, x):
        return 1.0 if x >= self.shift_c else 0.0

    def mean(self):
        return self.shift_c

    def second_moment(self):
        return self.shift_c ** 2

    def partial_moment(self, k, lo, hi):
        if k not in (0, 1, 2):
            raise DomainError(f"Invalid moment order: {k}, must be 0, 1, or 2")
        return self.shift_c ** k if lo <= self.shift_c <= hi else 0.0

    def sample(self, rng, size):
        return np.full(size, self.shift_c)


class GenericDensity(ServiceDistribution):
    """ Service time with an arbitrary density on ``[c, inf)``; moments by adaptive quadrature and sampling by
        rejection from an enclosing shifted exponential.

        Parameters:
            pdf (Callable[[float], float]): Density of ``X``, zero below ``c``.
            c (float): Shift of the support.
            cdf (Optional[Callable[[float], float]]): Distribution function, integrated from ``pdf`` when omitted.
            vectorized (bool): If ``pdf`` accepts numpy arrays.
            envelope_rate (Optional[float]): Rate of the enclosing exponential, ``1 / (E[X] - c)`` by default.
            envelope_bound (Optional[float]): Bound ``M`` with ``pdf <= M * envelope``, estimated on a grid by default.
            token (str): Config token of the law, ``gen`` when it has none.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When ``pdf`` does not integrate to 1 or the envelope is unbounded.
    """
    kind = "gen"

    def __init__(self, pdf: Callable[[float], float], c: float = 0.0, cdf: Optional[Callable[[float], float]] = None,
                 vectorized: bool = False, envelope_rate: Optional[float] = None,
                 envelope_bound: Optional[float] = None, token: str = "gen"):
        super().__init__(c)
        self._pdf = pdf
        self._cdf = cdf
        self._vectorized = vectorized
        self._token = token
        self._fields = ("token", "shift_c")
        mass = _quad(self.pdf, self.shift_c, math.inf, title="total mass")
        if abs(mass - 1.0) > 1e-6:
            raise ConfigError(f"Invalid density {token}: integrates to {mass} over [c, inf)")
        self.horizon = self._find_horizon()
        self._mean = self.partial_moment(1, self.shift_c, self.horizon)
        self._second = self.partial_moment(2, self.shift_c, self.horizon)
        if not math.isfinite(self._second):
            raise ConfigError(f"Invalid density {token}: infinite second moment")
        if envelope_rate is None:
            spread = self._mean - self.shift_c
            if spread <= 0:
                raise ConfigError(f"Invalid density {token}: no spread above c to fit an envelope")
            envelope_rate = 1.0 / spread
        self.envelope_rate = float(envelope_rate)
        self.envelope_bound = float(envelope_bound) if envelope_bound else self._estimate_bound()
        logger.debug(f"{token}: horizon={self.horizon} envelope rate={self.envelope_rate} bound={self.envelope_bound}")
        self._loading = False

    def _find_horizon(self) -> float:
        """ Finite upper limit with tail mass below ``TAIL_MASS``. """
        step = 1.0
        for _ in range(200):
            horizon = self.shift_c + step
            if _quad(self.pdf, horizon, math.inf, title="tail mass") < TAIL_MASS:
                return horizon
            step *= 2.0
        raise ConfigError(f"Invalid density {self._token}: tail mass never falls below {TAIL_MASS}")

    def _pdf_array(self, xs: np.ndarray) -> np.ndarray:
        if self._vectorized:
            return np.asarray(self._pdf(xs), dtype=float)
        return np.fromiter((self._pdf(float(x)) for x in xs), dtype=float, count=len(xs))

    def _envelope(self, xs: np.ndarray) -> np.ndarray:
        return self.envelope_rate * np.exp(-self.envelope_rate * (xs - self.shift_c))

    def _estimate_bound(self) -> float:
        xs = np.linspace(self.shift_c, self.horizon, 4097)
        ratio = self._pdf_array(xs) / self._envelope(xs)
        bound = float(np.max(ratio))
        if not math.isfinite(bound) or bound <= 0:
            raise ConfigError(f"Invalid density {self._token}: exponential envelope with rate "
                              f"{self.envelope_rate} cannot enclose it")
        return 1.05 * bound

    @property
    def token(self) -> str:
        return self._token

    def pdf(self, x):
        if x < self.shift_c:
            return 0.0
        return float(self._pdf(x))

    def cdf(self, x):
        if x <= self.shift_c:
            return 0.0
        if math.isinf(x):
            return 1.0
        if self._cdf is not None:
            return float(self._cdf(x))
        return _quad(self.pdf, self.shift_c, x, title="cdf")

    def mean(self):
        return self._mean

    def second_moment(self):
        return self._second

    def partial_moment(self, k, lo, hi):
        if k not in (0, 1, 2):
            raise DomainError(f"Invalid moment order: {k}, must be 0, 1, or 2")
        lo = max(lo, self.shift_c)
        hi = min(hi, self.horizon) if hasattr(self, "horizon") else hi
        return _quad(lambda y: y ** k * self.pdf(y), lo, hi, title=f"moment {k}")

    def sample(self, rng, size):
        accepted = np.empty(0)
        while accepted.size < size:
            batch = max(int(math.ceil((size - accepted.size) * self.envelope_bound * 1.1)), 16)
            xs = self.shift_c - np.log1p(-rng.random(batch)) / self.envelope_rate
            keep = rng.random(batch) * self.envelope_bound * self._envelope(xs) <= self._pdf_array(xs)
            accepted = np.concatenate([accepted, xs[keep]])
        return accepted[:size]


def erlang(k: int, rate: float, c: float = 0.0) -> GenericDensity:
    """ Shifted Erlang law ``c + Gamma(k, 1/rate)`` as a :class:`GenericDensity`.

        Parameters:
            k (int): Number of exponential phases, >= 1.
            rate (float): Rate of each phase.
            c (float): Shift.
    """
    k = util.parse(k, value_type="int")
    rate = util.parse(rate, value_type="float")
    c = util.parse(c, value_type="float")
    if k < 1 or not 0 < rate < math.inf:
        raise ConfigError(f"Invalid erlang parameters: k={k} rate={rate}")
    law = stats.gamma(a=k, loc=c, scale=1.0 / rate)
    token = f"erlang:k={k},rate={rate!r}" + (f",c={c!r}" if c else "")
    return GenericDensity(law.pdf, c=c, cdf=law.cdf, vectorized=True, envelope_rate=rate / k, token=token)


_required = {
    "exp": ["rate"],
    "sexp": ["rate", "c"],
    "det": ["c"],
    "erlang": ["k", "rate"],
}
_optional = {"erlang": ["c"]}


def parse_distribution(token: str) -> ServiceDistribution:
    """ Build a distribution from a config token ``kind:key=value[,key=value]*``.

        Parameters:
            token (str): e.g. ``exp:rate=1``, ``sexp:rate=1,c=0.5``, ``det:c=2``, or ``erlang:k=2,rate=1``.

        Returns:
            :class:`ServiceDistribution`: The distribution.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When the token is malformed or a parameter is invalid.
    """
    if not isinstance(token, str) or ":" not in token:
        raise ConfigError(f"Invalid Distribution: '{token}' Expected: kind:key=value[,key=value]*")
    kind, _, rest = token.strip().partition(":")
    kind = util.validate_options("Distribution", kind.strip(), kind_options)
    params = util.parse_pairs(rest, title=f"{kind} parameters")
    allowed = _required[kind] + _optional.get(kind, [])
    for key in params:
        util.validate_options(f"{kind} parameter", key, allowed)
    for key in _required[kind]:
        if key not in params:
            raise ConfigError(f"Invalid Distribution: '{token}' Missing parameter: {key}")
    if kind == "exp":
        return Exponential(params["rate"])
    elif kind == "sexp":
        return ShiftedExponential(params["rate"], params["c"])
    elif kind == "det":
        return Deterministic(params["c"])
    return erlang(params["k"], params["rate"], params.get("c", 0.0))


def truncation_prob(dist: ServiceDistribution, gamma: float) -> float:
    """ ``P(X <= gamma)``; see :meth:`ServiceDistribution.truncation_prob`. """
    return dist.truncation_prob(gamma)


def truncated_moments(dist: ServiceDistribution, gamma: float) -> TruncatedAgeMoments:
    """ Truncated age moments; see :meth:`ServiceDistribution.truncated_moments`. """
    return dist.truncated_moments(gamma)


def partial_moment(dist: ServiceDistribution, k: int, lo: float, hi: float) -> float:
    """ ``integral of y^k f_X(y) dy`` over ``[lo, hi]``; see :meth:`ServiceDistribution.partial_moment`. """
    return dist.partial_moment(k, lo, hi)

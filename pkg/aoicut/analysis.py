import logging
import math
from typing import Optional, Tuple

from scipy import optimize

from .dist import ServiceDistribution
from .exceptions import BisectionBracketFailure, DomainError
from .objs import EpochStats, Policy, SolveResult

logger = logging.getLogger(__name__)

TOL_LAMBDA = 1e-9
TOL_G = 1e-8
MAX_ITER = 200
LEFT_OFFSET = 1e-12


def epoch_stats(dist: ServiceDistribution, gamma: float) -> EpochStats:
    """ Busy period moments of one epoch under the gamma-cutoff policy.

        ``E[T] = (1/p - 1) gamma + E[Y]`` and
        ``E[T^2] = (1/p - 1)(2/p - 1) gamma^2 + 2 (1/p - 1) gamma E[Y] + E[Y^2]``, where the number of uploads per epoch
        is geometric with mean ``1/p``.

        Parameters:
            dist (ServiceDistribution): Service time law.
            gamma (float): Cutoff time, ``math.inf`` for no preemption.

        Returns:
            :class:`~aoicut.objs.EpochStats`: The epoch statistics.

        Raises:
            :class:`~aoicut.exceptions.TruncationMassZero`: When ``P(X <= gamma)`` is numerically zero.
    """
    moments = dist.truncated_moments(gamma)
    p, ey, ey2 = moments.p, moments.ey, moments.ey2
    if math.isinf(gamma) or p >= 1.0:
        et, et2 = ey, ey2
    else:
        q = 1.0 / p - 1.0
        et = q * gamma + ey
        et2 = q * (2.0 / p - 1.0) * gamma ** 2 + 2.0 * q * gamma * ey + ey2
    et2 = max(et2, et * et)
    logger.debug(f"{dist.token} gamma={gamma}: E[T]={et} E[T^2]={et2}")
    return EpochStats(gamma, moments, et, et2)


def zero_wait_ratio(stats: EpochStats) -> float:
    """ Left side of the zero-wait test, ``(0.5 (1/p - 1) gamma^2 + 0.5 E[Y^2]) / ((1/p - 1) gamma + E[Y])``. """
    if math.isinf(stats.gamma) or stats.p >= 1.0:
        return 0.5 * stats.ey2 / stats.ey
    q = 1.0 / stats.p - 1.0
    return (0.5 * q * stats.gamma ** 2 + 0.5 * stats.ey2) / (q * stats.gamma + stats.ey)


def zero_wait_optimal(stats: EpochStats, c: float) -> bool:
    """ If uploading right after every delivery is optimal for this cutoff.

        Parameters:
            stats (EpochStats): Epoch statistics of the cutoff.
            c (float): Shift of the service distribution.

        Returns:
            bool: True iff :func:`zero_wait_ratio` ``<= c``.
    """
    return zero_wait_ratio(stats) <= c


def aoi_zero_wait(stats: EpochStats) -> float:
    """ Average AoI of the zero-wait policy, ``E[Y] + E[T^2] / (2 E[T])``. """
    return stats.ey + 0.5 * stats.et2 / stats.et


def always_wait_aoi(stats: EpochStats) -> float:
    """ ``E[Y] + sqrt(1 - p) / p * gamma``: the auxiliary root when ``w(t) = lambda - E[T] - t`` is used on the whole
        of ``[c, gamma]`` without clipping at zero. Dropping the constraint only lowers the auxiliary objective, so
        this is a lower bound on ``lambda*``.
    """
    if math.isinf(stats.gamma) or stats.p >= 1.0:
        return stats.ey
    return stats.ey + math.sqrt(1.0 - stats.p) / stats.p * stats.gamma


def renewal_terms(theta: float, dist: ServiceDistribution, gamma: float,
                  stats: Optional[EpochStats] = None) -> Tuple[float, float]:
    """ ``E[Q]`` and ``E[L]`` per epoch when waiting follows ``w(t) = max(theta - t, 0)``.

        The waiting terms are integrated over ``[c, min(theta, gamma)]`` only; above ``theta`` they vanish.

        Parameters:
            theta (float): Waiting threshold.
            dist (ServiceDistribution): Service time law.
            gamma (float): Cutoff time.
            stats (Optional[EpochStats]): Epoch statistics of ``gamma``, computed when omitted.

        Returns:
            Tuple[float, float]: ``(E[Q], E[L])``.

        Raises:
            :class:`~aoicut.exceptions.QuadratureFailure`: When integration misses its tolerance.
    """
    if stats is None:
        stats = epoch_stats(dist, gamma)
    c = dist.shift_c
    upper = min(theta, gamma)
    ew = eyw = ew2 = 0.0
    if upper > c:
        m0 = dist.partial_moment(0, c, upper) / stats.p
        m1 = dist.partial_moment(1, c, upper) / stats.p
        m2 = dist.partial_moment(2, c, upper) / stats.p
        ew = max(theta * m0 - m1, 0.0)
        eyw = theta * m1 - m2
        ew2 = max(theta * theta * m0 - 2.0 * theta * m1 + m2, 0.0)
    el = ew + stats.et
    eq = eyw + stats.ey * stats.et + 0.5 * ew2 + ew * stats.et + 0.5 * stats.et2
    return eq, el


def g_eval(lam: float, dist: ServiceDistribution, gamma: float, stats: Optional[EpochStats] = None) -> float:
    """ Dinkelbach auxiliary value ``g(lambda) = min_w E[Q] - lambda E[L]``, attained at ``w(t) = [lambda - E[T] - t]^+``.

        Parameters:
            lam (float): Candidate average AoI, >= 0.
            dist (ServiceDistribution): Service time law.
            gamma (float): Cutoff time.
            stats (Optional[EpochStats]): Epoch statistics of ``gamma``, computed when omitted.

        Returns:
            float: ``g(lambda)``; strictly decreasing in ``lambda`` and zero at ``lambda*``.

        Raises:
            :class:`~aoicut.exceptions.DomainError`: When ``lam < 0``.
            :class:`~aoicut.exceptions.QuadratureFailure`: When integration misses its tolerance.
    """
    if not lam >= 0:
        raise DomainError(f"Invalid lambda: {lam}, must be >= 0")
    if stats is None:
        stats = epoch_stats(dist, gamma)
    eq, el = renewal_terms(lam - stats.et, dist, gamma, stats)
    return eq - lam * el


def policy_aoi(dist: ServiceDistribution, policy: Policy, stats: Optional[EpochStats] = None) -> float:
    """ Long run average AoI ``E[Q] / E[L]`` of any (gamma, theta) :class:`~aoicut.objs.Policy`. """
    if stats is None:
        stats = epoch_stats(dist, policy.gamma)
    eq, el = renewal_terms(policy.theta, dist, policy.gamma, stats)
    return eq / el


def solve_lambda(dist: ServiceDistribution, gamma: float, tol_lambda: float = TOL_LAMBDA, tol_g: float = TOL_G,
                 max_iter: int = MAX_ITER) -> SolveResult:
    """ Optimal average AoI and waiting threshold for a fixed cutoff.

        The zero-wait test is checked first. When it fails, ``g`` is bisected over ``(E[T] + c, E[T] + gamma]``; with
        no cutoff the right end is the zero-wait AoI, where ``g <= 0`` always holds.

        Parameters:
            dist (ServiceDistribution): Service time law.
            gamma (float): Cutoff time, ``math.inf`` for no preemption.
            tol_lambda (float): Bisection interval width.
            tol_g (float): Accepted ``|g|`` at termination.
            max_iter (int): Maximum bisection iterations.

        Returns:
            :class:`~aoicut.objs.SolveResult`: ``lambda*``, threshold and diagnostics.

        Raises:
            :class:`~aoicut.exceptions.TruncationMassZero`: When ``P(X <= gamma)`` is numerically zero.
            :class:`~aoicut.exceptions.BisectionBracketFailure`: When ``g`` keeps its sign over the bracket.
    """
    stats = epoch_stats(dist, gamma)
    c = dist.shift_c
    if zero_wait_optimal(stats, c):
        lam = aoi_zero_wait(stats)
        residual = abs(g_eval(lam, dist, gamma, stats))
        logger.debug(f"{dist.token} gamma={gamma}: zero-wait optimal, lambda*={lam}")
        return SolveResult(gamma, lam, c, True, 0, residual, stats.et)

    def g(lam):
        return g_eval(lam, dist, gamma, stats)

    lo = stats.et + c + LEFT_OFFSET
    hi = stats.et + gamma if math.isfinite(gamma) else aoi_zero_wait(stats)
    g_lo, g_hi = g(lo), g(hi)
    logger.debug(f"{dist.token} gamma={gamma}: bracket [{lo}, {hi}] g=({g_lo}, {g_hi})")
    iterations = 0
    if g_lo <= 0:
        if g_lo < -tol_g:
            raise BisectionBracketFailure(f"g({lo}) = {g_lo} <= 0 at the left end for {dist.token} gamma={gamma}")
        root = lo
    elif g_hi >= 0:
        if g_hi > tol_g:
            raise BisectionBracketFailure(f"g({hi}) = {g_hi} > 0 at the right end for {dist.token} gamma={gamma}")
        root = hi
    else:
        root, info = optimize.bisect(g, lo, hi, xtol=tol_lambda, maxiter=max_iter, full_output=True, disp=False)
        iterations = info.iterations
        if not info.converged:
            logger.warning(f"{dist.token} gamma={gamma}: bisection stopped after {iterations} iterations")
    residual = abs(g(root))
    if residual > tol_g:
        logger.warning(f"{dist.token} gamma={gamma}: |g(lambda*)| = {residual} above {tol_g}")
    theta = min(root - stats.et, gamma)
    logger.debug(f"{dist.token} gamma={gamma}: lambda*={root} theta={theta} after {iterations} iterations")
    return SolveResult(gamma, root, theta, False, iterations, residual, stats.et, bracket=(lo, hi))


def waiting_time(theta: float, t: float, c: float = 0.0, gamma: float = math.inf) -> float:
    """ Idle time before the first upload of an epoch that starts at age ``t``.

        The age when that upload happens is ``max(t, theta)``.

        Parameters:
            theta (float): Waiting threshold.
            t (float): Age at the start of the epoch, in ``[c, gamma]``.
            c (float): Shift of the service distribution.
            gamma (float): Cutoff time.

        Returns:
            float: ``max(theta - t, 0)``.

        Raises:
            :class:`~aoicut.exceptions.DomainError`: When ``t`` is outside ``[c, gamma]``.
    """
    if not c <= t <= gamma:
        raise DomainError(f"Invalid starting age: {t}, must be in [{c}, {gamma}]")
    return max(theta - t, 0.0)

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .analysis import aoi_zero_wait, epoch_stats, solve_lambda, zero_wait_optimal
from .dist import Exponential, ServiceDistribution, ShiftedExponential
from .exceptions import AoIException, ConfigError, DomainError
from .objs import CutoffSweep, SweepPoint

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 200
REFINE_WIDTH = 1e-6
MAX_BOUNDARY_ITER = 400
CRITICAL_SHIFT = math.sqrt(2.0)

policy_names = [
    "no cutoff & zero-wait",
    "optimal cutoff & zero-wait",
    "no cutoff & optimal wait",
    "optimal cutoff & optimal wait",
]


def default_gamma_range(dist: ServiceDistribution) -> Tuple[float, float]:
    """ ``[c + 1e-4, c + 20 * scale]`` with ``scale = E[X] - c``, or 1 when that is zero. """
    c = dist.shift_c
    scale = dist.mean() - c
    if scale <= 0:
        scale = 1.0
    return c + 1e-4, c + 20.0 * scale


def _run_ordered(func: Callable, items: Sequence, workers: Optional[int]) -> List:
    """ ``[func(item) for item in items]``, on a thread pool when ``workers > 1``; order always follows ``items``. """
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def _evaluate(dist: ServiceDistribution, gamma: float, waiting: bool) -> SweepPoint:
    try:
        if waiting:
            result = solve_lambda(dist, gamma)
            return SweepPoint(gamma, result.lambda_star, result.theta, result.zero_wait)
        stats = epoch_stats(dist, gamma)
        return SweepPoint(gamma, aoi_zero_wait(stats), dist.shift_c, zero_wait_optimal(stats, dist.shift_c))
    except AoIException as e:
        logger.warning(f"{dist.token} gamma={gamma}: grid point failed: {e}")
        return SweepPoint(gamma, error=str(e))


def optimize_gamma(dist: ServiceDistribution, gamma_min: Optional[float] = None, gamma_max: Optional[float] = None,
                   grid_points: int = DEFAULT_GRID_POINTS, refine_width: float = REFINE_WIDTH, waiting: bool = True,
                   workers: Optional[int] = None) -> CutoffSweep:
    """ Minimize ``lambda*(gamma)`` over the cutoff.

        A coarse grid, log-spaced in ``gamma - c``, comes first since ``lambda*(gamma)`` is not known to be unimodal;
        golden-section search then refines around the best interior grid point. A minimizer on the edge of the range
        is reported through ``boundary`` rather than refined.

        Parameters:
            dist (ServiceDistribution): Service time law.
            gamma_min (Optional[float]): Smallest cutoff, ``c + 1e-4`` by default.
            gamma_max (Optional[float]): Largest cutoff, ``c + 20 (E[X] - c)`` by default.
            grid_points (int): Number of grid points, >= 2.
            refine_width (float): Width the golden-section bracket is shrunk to.
            waiting (bool): Sweep the optimal-waiting ``lambda*``; when False sweep the zero-wait AoI instead.
            workers (Optional[int]): Threads evaluating grid points.

        Returns:
            :class:`~aoicut.objs.CutoffSweep`: Grid and best cutoff.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When the range or grid size is invalid.
            :class:`~aoicut.exceptions.AoIException`: When every grid point fails.
    """
    c = dist.shift_c
    default_min, default_max = default_gamma_range(dist)
    gamma_min = default_min if gamma_min is None else float(gamma_min)
    gamma_max = default_max if gamma_max is None else float(gamma_max)
    if not c < gamma_min < gamma_max < math.inf:
        raise ConfigError(f"Invalid gamma range: [{gamma_min}, {gamma_max}], need c = {c} < gamma_min < gamma_max")
    if grid_points < 2:
        raise ConfigError(f"Invalid grid points: {grid_points}, must be >= 2")
    gammas = c + np.logspace(math.log10(gamma_min - c), math.log10(gamma_max - c), grid_points)
    gammas[0], gammas[-1] = gamma_min, gamma_max
    grid = _run_ordered(lambda gamma: _evaluate(dist, float(gamma), waiting), list(gammas), workers)

    valid = [i for i, point in enumerate(grid) if not point.failed]
    if not valid:
        raise AoIException(f"Every grid point failed for {dist.token} over [{gamma_min}, {gamma_max}]")
    best = min(valid, key=lambda i: grid[i].lambda_star)
    gamma_star, lam_star = grid[best].gamma, grid[best].lambda_star
    boundary = "lower" if best == 0 else "upper" if best == grid_points - 1 else None
    refined = False

    if boundary is None:
        left = max(i for i in valid if i < best) if any(i < best for i in valid) else None
        right = min(i for i in valid if i > best) if any(i > best for i in valid) else None
        if left is not None and right is not None:
            def objective(gamma):
                point = _evaluate(dist, float(gamma), waiting)
                return math.inf if point.failed else point.lambda_star

            brack = (grid[left].gamma, gamma_star, grid[right].gamma)
            try:
                x, fx, calls = optimize.golden(objective, brack=brack, tol=refine_width / (2.0 * gamma_star),
                                               full_output=True)
                logger.debug(f"{dist.token}: golden refinement to gamma={x} lambda={fx} in {calls} calls")
                if fx < lam_star:
                    gamma_star, lam_star = float(x), float(fx)
                refined = True
            except ValueError as e:
                logger.warning(f"{dist.token}: golden refinement around gamma={gamma_star} skipped: {e}")
    else:
        logger.info(f"{dist.token}: minimizer on the {boundary} edge of [{gamma_min}, {gamma_max}]")

    final = _evaluate(dist, gamma_star, waiting)
    theta = final.theta if not final.failed else c
    zero_wait = final.zero_wait if not final.failed else True
    logger.debug(f"{dist.token}: gamma*={gamma_star} lambda**={lam_star} (waiting={waiting})")
    return CutoffSweep(grid, gamma_star, lam_star, theta, zero_wait, boundary=boundary, refined=refined)


def zero_wait_boundary(c: float, rate: float = 1.0) -> float:
    """ Cutoff above which zero-wait stops being optimal for the shifted exponential.

        Root on ``(c, inf)`` of ``(1 + rate (gamma - c)) exp(-rate (gamma - c)) = 1 - (rate c)^2 / 2``; the left side
        decreases from 1, so the root is unique.

        Parameters:
            c (float): Shift, in ``(0, sqrt(2) / rate)``.
            rate (float): Rate of the exponential part.

        Returns:
            float: The boundary cutoff ``gamma_bar(c)``.

        Raises:
            :class:`~aoicut.exceptions.DomainError`: When ``c`` is outside ``(0, sqrt(2) / rate)``; zero-wait is then
                optimal for every cutoff and no boundary exists.
    """
    if not rate > 0:
        raise DomainError(f"Invalid rate: {rate}, must be > 0")
    s = rate * c
    if not 0 < s < CRITICAL_SHIFT:
        raise DomainError(f"Invalid shift c: {c}, must be in (0, {CRITICAL_SHIFT / rate})")
    target = 1.0 - 0.5 * s * s

    def h(delta):
        return (1.0 + delta) * math.exp(-delta) - target

    upper = 1.0
    while h(upper) > 0:
        upper *= 2.0
    delta = optimize.bisect(h, 0.0, upper, xtol=1e-14, maxiter=MAX_BOUNDARY_ITER)
    return (s + delta) / rate


def _shifted(c: float, rate: float) -> ServiceDistribution:
    return ShiftedExponential(rate, c) if c > 0 else Exponential(rate)


def compare_policies(dist: ServiceDistribution, gamma_min: Optional[float] = None,
                     gamma_max: Optional[float] = None, grid_points: int = DEFAULT_GRID_POINTS,
                     workers: Optional[int] = None) -> List[Tuple[str, float]]:
    """ Average AoI of the optimal policy and its three baselines.

        Parameters:
            dist (ServiceDistribution): Service time law with finite ``E[X]`` and ``E[X^2]``.
            gamma_min (Optional[float]): Smallest cutoff swept.
            gamma_max (Optional[float]): Largest cutoff swept.
            grid_points (int): Grid points of each sweep.
            workers (Optional[int]): Threads evaluating grid points.

        Returns:
            List[Tuple[str, float]]: ``(name, lambda)`` for, in order, no cutoff & zero-wait, optimal cutoff &
            zero-wait, no cutoff & optimal wait, and optimal cutoff & optimal wait; the last is the smallest.
    """
    no_cutoff = epoch_stats(dist, math.inf)
    no_cut_zero_wait = aoi_zero_wait(no_cutoff)
    zero_wait_sweep = optimize_gamma(dist, gamma_min, gamma_max, grid_points, waiting=False, workers=workers)
    cut_zero_wait = min(zero_wait_sweep.lambda_double_star, no_cut_zero_wait)
    no_cut_wait = solve_lambda(dist, math.inf).lambda_star
    sweep = optimize_gamma(dist, gamma_min, gamma_max, grid_points, waiting=True, workers=workers)
    at_zero_wait_cutoff = solve_lambda(dist, zero_wait_sweep.gamma_star).lambda_star
    best = min(sweep.lambda_double_star, no_cut_wait, at_zero_wait_cutoff, cut_zero_wait)
    values = [no_cut_zero_wait, cut_zero_wait, no_cut_wait, best]
    for name, value in zip(policy_names, values):
        logger.debug(f"{dist.token}: {name} = {value}")
    return list(zip(policy_names, values))


def c_sweep(c_values: Sequence[float], rate: float = 1.0, grid_points: int = DEFAULT_GRID_POINTS,
            workers: Optional[int] = None) -> List[Dict]:
    """ Optimal cutoff and AoI versus the shift ``c`` of a shifted exponential.

        Parameters:
            c_values (Sequence[float]): Shifts, >= 0.
            rate (float): Rate of the exponential part.
            grid_points (int): Grid points of each cutoff sweep.
            workers (Optional[int]): Threads evaluating grid points.

        Returns:
            List[Dict]: Rows with c, gamma_star, lambda_double_star, gamma_bar (None when ``c >= sqrt(2) / rate``),
            zero_wait, and boundary.
    """
    rows = []
    for c in c_values:
        dist = _shifted(float(c), rate)
        sweep = optimize_gamma(dist, grid_points=grid_points, workers=workers)
        gamma_bar = zero_wait_boundary(c, rate) if 0 < rate * c < CRITICAL_SHIFT else None
        rows.append({
            "c": float(c),
            "gamma_star": sweep.gamma_star,
            "lambda_double_star": sweep.lambda_double_star,
            "gamma_bar": gamma_bar,
            "zero_wait": sweep.zero_wait,
            "boundary": sweep.boundary,
        })
    return rows


def crossover_scan(c_values: Sequence[float], rate: float = 1.0, grid_points: int = DEFAULT_GRID_POINTS,
                   workers: Optional[int] = None) -> List[Dict]:
    """ Optimal cutoff & zero-wait against no cutoff & optimal wait, across shifts of a shifted exponential.

        Returns:
            List[Dict]: Rows with c, the two AoI values, and winner (``cutoff`` or ``wait``).
    """
    rows = []
    for c in c_values:
        dist = _shifted(float(c), rate)
        sweep = optimize_gamma(dist, grid_points=grid_points, waiting=False, workers=workers)
        cut_zero_wait = min(sweep.lambda_double_star, aoi_zero_wait(epoch_stats(dist, math.inf)))
        no_cut_wait = solve_lambda(dist, math.inf).lambda_star
        rows.append({
            "c": float(c),
            "optimal_cutoff_zero_wait": cut_zero_wait,
            "no_cutoff_optimal_wait": no_cut_wait,
            "winner": "cutoff" if cut_zero_wait < no_cut_wait else "wait",
        })
    return rows

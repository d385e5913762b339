import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import stats as sps

from .analysis import waiting_time
from .dist import ServiceDistribution
from .exceptions import ConfigError
from .objs import EpochRecord, Policy, SimReport, Trajectory

logger = logging.getLogger(__name__)

MIN_EPOCHS = 1000
MAX_TRAJECTORY_EPOCHS = 10 ** 4
DEFAULT_BATCHES = 100
MIN_EXPECTED_COUNT = 5.0


class EpochBatch(NamedTuple):
    """ Every :class:`~aoicut.objs.EpochRecord` field of consecutive epochs, as numpy arrays. """
    start_age: np.ndarray
    wait: np.ndarray
    uploads: np.ndarray
    busy: np.ndarray
    end_age: np.ndarray
    length: np.ndarray
    area: np.ndarray


def make_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """ Counter-based Philox generator for stream ``seed + replication``. """
    return np.random.Generator(np.random.Philox(int(seed) + int(replication)))


def _check_policy(policy: Policy, dist: ServiceDistribution) -> None:
    if policy.shift != dist.shift_c:
        raise ConfigError(f"Invalid Policy: built for c={policy.shift}, distribution {dist.token} has c={dist.shift_c}")


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"Invalid seed: {seed}, must be an integer in [0, 2^64)")
    return int(seed)


def sample_epoch(policy: Policy, dist: ServiceDistribution, rng: np.random.Generator,
                 start_age: float) -> EpochRecord:
    """ Simulate one epoch: wait, then upload until a service time finishes within the cutoff.

        Every draw above ``gamma`` is preempted after exactly ``gamma`` and a fresh measurement is uploaded at once.

        Parameters:
            policy (Policy): Cutoff and waiting threshold.
            dist (ServiceDistribution): Service time law.
            rng (np.random.Generator): Random stream.
            start_age (float): Age at the start of the epoch, in ``[c, gamma]``.

        Returns:
            :class:`~aoicut.objs.EpochRecord`: The epoch. Its ``end_age`` starts the next epoch.

        Raises:
            :class:`~aoicut.exceptions.DomainError`: When ``start_age`` is outside ``[c, gamma]``.
    """
    _check_policy(policy, dist)
    wait = waiting_time(policy.theta, start_age, dist.shift_c, policy.gamma)
    uploads = 1
    while True:
        x = float(dist.sample(rng, 1)[0])
        if x <= policy.gamma:
            break
        uploads += 1
    busy = x if uploads == 1 else (uploads - 1) * policy.gamma + x
    return EpochRecord(start_age, wait, uploads, busy, x)


def simulate_epochs(policy: Policy, dist: ServiceDistribution, n_epochs: int, rng: np.random.Generator,
                    start_age: Optional[float] = None) -> EpochBatch:
    """ Simulate ``n_epochs`` consecutive epochs at once.

        Service times are drawn round by round for every epoch still in service, and each draw above ``gamma`` is
        preempted, so the upload count keeps its geometric law.

        Parameters:
            policy (Policy): Cutoff and waiting threshold.
            dist (ServiceDistribution): Service time law.
            n_epochs (int): Number of epochs, >= 1.
            rng (np.random.Generator): Random stream.
            start_age (Optional[float]): Age at the start of the first epoch, ``c`` by default.

        Returns:
            :class:`EpochBatch`: Epoch fields as arrays.

        Raises:
            :class:`~aoicut.exceptions.TruncationMassZero`: When ``P(X <= gamma)`` is numerically zero.
    """
    _check_policy(policy, dist)
    dist.truncation_prob(policy.gamma)
    if n_epochs < 1:
        raise ConfigError(f"Invalid epochs: {n_epochs}, must be >= 1")
    c, gamma = dist.shift_c, policy.gamma
    start_age = c if start_age is None else float(start_age)
    waiting_time(policy.theta, start_age, c, gamma)

    end_age = np.empty(n_epochs)
    uploads = np.ones(n_epochs, dtype=np.int64)
    pending = np.arange(n_epochs)
    while pending.size:
        x = dist.sample(rng, pending.size)
        done = x <= gamma
        end_age[pending[done]] = x[done]
        pending = pending[~done]
        uploads[pending] += 1
    busy = end_age.copy() if math.isinf(gamma) else (uploads - 1) * gamma + end_age
    start = np.empty(n_epochs)
    start[0] = start_age
    start[1:] = end_age[:-1]
    wait = np.maximum(policy.theta - start, 0.0)
    length = wait + busy
    area = start * length + 0.5 * length * length
    return EpochBatch(start, wait, uploads, busy, end_age, length, area)


def _batch_sums(policy, dist, n_epochs, seed, replication, warmup, batches) -> Tuple[np.ndarray, np.ndarray]:
    epochs = simulate_epochs(policy, dist, n_epochs, make_rng(seed, replication))
    area = np.array_split(epochs.area[warmup:], batches)
    length = np.array_split(epochs.length[warmup:], batches)
    return np.array([a.sum() for a in area]), np.array([l.sum() for l in length])


def run_simulation(policy: Policy, dist: ServiceDistribution, n_epochs: int, seed: int,
                   warmup: Optional[int] = None, batches: int = DEFAULT_BATCHES, replications: int = 1,
                   workers: Optional[int] = None) -> SimReport:
    """ Renewal-reward estimate of the long run average AoI of a policy.

        The estimate is ``sum(Q) / sum(L)`` over the epochs after warmup. Its standard error comes from batch means
        with the delta method for a ratio: with batch sums ``Q_b`` and ``L_b``,
        ``stderr = sqrt(sum((Q_b - R L_b)^2) / (B (B - 1))) / mean(L_b)``.

        Parameters:
            policy (Policy): Cutoff and waiting threshold.
            dist (ServiceDistribution): Service time law.
            n_epochs (int): Epochs per replication, >= 1000.
            seed (int): Base seed; replication ``r`` uses stream ``seed + r``.
            warmup (Optional[int]): Epochs discarded per replication, ``max(100, n_epochs // 100)`` by default.
            batches (int): Batches per replication.
            replications (int): Independent replications pooled by replication index.
            workers (Optional[int]): Threads running replications.

        Returns:
            :class:`~aoicut.objs.SimReport`: Bit-identical for the same arguments.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When a count or the seed is invalid.
    """
    seed = _check_seed(seed)
    if n_epochs < MIN_EPOCHS:
        raise ConfigError(f"Invalid epochs: {n_epochs}, must be >= {MIN_EPOCHS}")
    if warmup is None:
        warmup = min(max(100, n_epochs // 100), n_epochs - 1)
    if not 0 <= warmup < n_epochs:
        raise ConfigError(f"Invalid warmup: {warmup}, must be in [0, {n_epochs})")
    if batches < 2 or n_epochs - warmup < batches:
        raise ConfigError(f"Invalid batches: {batches}, need 2 <= batches <= {n_epochs - warmup}")
    if replications < 1:
        raise ConfigError(f"Invalid replications: {replications}, must be >= 1")

    def replicate(r):
        return _batch_sums(policy, dist, n_epochs, seed, r, warmup, batches)

    if workers is not None and workers > 1 and replications > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            sums = list(executor.map(replicate, range(replications)))
    else:
        sums = [replicate(r) for r in range(replications)]
    area = np.concatenate([s[0] for s in sums])
    length = np.concatenate([s[1] for s in sums])
    avg = area.sum() / length.sum()
    k = area.size
    stderr = math.sqrt(np.sum((area - avg * length) ** 2) / (k * (k - 1))) / length.mean()
    logger.debug(f"{dist.token} {policy}: {n_epochs} x {replications} epochs, AoI={avg} stderr={stderr}")
    return SimReport(avg, (n_epochs - warmup) * replications, stderr, seed, warmup, batches, replications)


def export_trajectory(policy: Policy, dist: ServiceDistribution, n_epochs: int, seed: int,
                      start_age: Optional[float] = None) -> Trajectory:
    """ Age sample path for plotting: slope 1 everywhere, a drop to the new age at every delivery, no drop at a
        preemption.

        Parameters:
            policy (Policy): Cutoff and waiting threshold.
            dist (ServiceDistribution): Service time law.
            n_epochs (int): Epochs, in ``[1, 10^4]``.
            seed (int): Seed of the random stream.
            start_age (Optional[float]): Age at time 0, ``c`` by default.

        Returns:
            :class:`~aoicut.objs.Trajectory`: Breakpoints with preemption and delivery marks.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When ``n_epochs`` or the seed is invalid.
    """
    seed = _check_seed(seed)
    if not 1 <= n_epochs <= MAX_TRAJECTORY_EPOCHS:
        raise ConfigError(f"Invalid epochs: {n_epochs}, must be in [1, {MAX_TRAJECTORY_EPOCHS}]")
    rng = make_rng(seed)
    age = dist.shift_c if start_age is None else float(start_age)
    t = 0.0
    points = [(t, age)]
    preemptions, deliveries, records = [], [], []
    for _ in range(n_epochs):
        record = sample_epoch(policy, dist, rng, age)
        if record.wait > 0:
            points.append((t + record.wait, age + record.wait))
        for j in range(1, record.uploads):
            offset = record.wait + j * policy.gamma
            points.append((t + offset, age + offset))
            preemptions.append((t + offset, age + offset))
        t += record.length
        points.append((t, age + record.length))
        points.append((t, record.end_age))
        deliveries.append((t, record.end_age))
        records.append(record)
        age = record.end_age
    return Trajectory(points, preemptions, deliveries, records)


def upload_count_gof(policy: Policy, dist: ServiceDistribution, n_epochs: int, seed: int) -> Tuple[float, float]:
    """ Chi-square goodness of fit of the uploads per epoch against ``P(N = n) = (1 - p)^(n - 1) p``.

        Counts ``1..K`` get a cell each and ``N > K`` shares one tail cell, with ``K`` as large as keeps every
        expected count at least 5.

        Returns:
            Tuple[float, float]: Chi-square statistic and p-value; ``(0.0, 1.0)`` when ``p = 1``.
    """
    seed = _check_seed(seed)
    p = dist.truncation_prob(policy.gamma)
    uploads = simulate_epochs(policy, dist, n_epochs, make_rng(seed)).uploads
    if p >= 1.0:
        return 0.0, 1.0
    k = 0
    while n_epochs * (1 - p) ** k * p >= MIN_EXPECTED_COUNT and n_epochs * (1 - p) ** (k + 1) >= MIN_EXPECTED_COUNT:
        k += 1
    if k == 0:
        raise ConfigError(f"Invalid epochs: {n_epochs} too few for a goodness of fit at p={p}")
    cells = np.arange(1, k + 1)
    expected = np.append(n_epochs * (1 - p) ** (cells - 1) * p, n_epochs * (1 - p) ** k)
    counts = np.bincount(np.minimum(uploads, k + 1), minlength=k + 2)[1:]
    result = sps.chisquare(counts, expected)
    logger.debug(f"{dist.token} gamma={policy.gamma}: chi2={result.statistic} p={result.pvalue} over {k + 1} cells")
    return float(result.statistic), float(result.pvalue)


def trajectory_rows(trajectory: Trajectory) -> List[dict]:
    """ ``t``, ``age`` rows of a :class:`~aoicut.objs.Trajectory`. """
    return [{"t": t, "age": age} for t, age in trajectory.points]

import math
from typing import Any, Dict, List, Optional, Tuple

from .exceptions import ConfigError


class BaseAoI:
    """ Base Class for AoICut Objects.

        Objects are read-only once built and compare equal when all of their fields are equal.
    """
    _fields: Tuple[str, ...] = ()

    def __init__(self):
        self._loading = True
        self._name = None

    def __repr__(self):
        return self.__str__()

    def __str__(self):
        return f"[{self.__class__.__name__}:{self._name}]"

    def __eq__(self, other):
        if type(self) is type(other):
            return self.to_dict() == other.to_dict()
        return NotImplemented

    __hash__ = None

    def __setattr__(self, key, value):
        if key not in ["_loading"] and self.__dict__.get("_loading", True) is False:
            raise AttributeError("Attributes cannot be edited")
        else:
            self.__dict__[key] = value

    def __delattr__(self, key):
        raise AttributeError("Attributes cannot be deleted")

    def to_dict(self) -> Dict[str, Any]:
        """ Field values by name, in declaration order. """
        return {field: getattr(self, field) for field in self._fields}


class TruncatedAgeMoments(BaseAoI):
    """ Represents the law of the age at the end of an epoch, i.e. the service time conditioned on ``X <= gamma``.

        Attributes:
            gamma (float): Cutoff time, ``math.inf`` for no cutoff.
            p (float): Probability ``P(X <= gamma)``.
            ey (float): Truncated mean ``E[Y]``.
            ey2 (float): Truncated second moment ``E[Y^2]``.
    """
    _fields = ("gamma", "p", "ey", "ey2")

    def __init__(self, gamma: float, p: float, ey: float, ey2: float):
        super().__init__()
        self.gamma = float(gamma)
        self.p = float(p)
        self.ey = float(ey)
        self.ey2 = float(ey2)
        self._name = f"gamma={self.gamma}"
        self._loading = False


class EpochStats(BaseAoI):
    """ Represents every cutoff dependent scalar of one (distribution, gamma) pair.

        Attributes:
            gamma (float): Cutoff time.
            moments (TruncatedAgeMoments): Truncated age moments.
            et (float): Expected busy period ``E[T]``.
            et2 (float): Second moment of the busy period ``E[T^2]``.
    """
    _fields = ("gamma", "moments", "et", "et2")

    def __init__(self, gamma: float, moments: TruncatedAgeMoments, et: float, et2: float):
        super().__init__()
        self.gamma = float(gamma)
        self.moments = moments
        self.et = float(et)
        self.et2 = float(et2)
        self._name = f"gamma={self.gamma}"
        self._loading = False

    @property
    def p(self) -> float:
        return self.moments.p

    @property
    def ey(self) -> float:
        return self.moments.ey

    @property
    def ey2(self) -> float:
        return self.moments.ey2

    @property
    def mean_uploads(self) -> float:
        """ ``E[N] = 1/p``. """
        return 1.0 / self.moments.p


class SolveResult(BaseAoI):
    """ Represents the optimal waiting solution for a fixed cutoff.

        Attributes:
            gamma (float): Cutoff time the solution is for.
            lambda_star (float): Optimal long run average AoI.
            theta (float): Waiting threshold ``lambda_star - E[T]``, equal to ``c`` for zero-wait.
            zero_wait (bool): If the zero-wait test held.
            iterations (int): Bisection iterations, 0 for zero-wait.
            residual (float): ``|g(lambda_star)|`` at termination.
            et (float): Expected busy period used.
            bracket (Optional[Tuple[float, float]]): Bisection bracket, None for zero-wait.
    """
    _fields = ("gamma", "lambda_star", "theta", "zero_wait", "iterations", "residual", "et", "bracket")

    def __init__(self, gamma: float, lambda_star: float, theta: float, zero_wait: bool, iterations: int,
                 residual: float, et: float, bracket: Optional[Tuple[float, float]] = None):
        super().__init__()
        self.gamma = float(gamma)
        self.lambda_star = float(lambda_star)
        self.theta = float(theta)
        self.zero_wait = bool(zero_wait)
        self.iterations = int(iterations)
        self.residual = float(residual)
        self.et = float(et)
        self.bracket = None if bracket is None else (float(bracket[0]), float(bracket[1]))
        self._name = f"lambda*={self.lambda_star}"
        self._loading = False

    def policy(self, shift: float) -> "Policy":
        """ The (gamma, theta) :class:`~aoicut.objs.Policy` this solution describes.

            Parameters:
                shift (float): Shift ``c`` of the service distribution solved for.
        """
        return Policy(self.gamma, max(self.theta, shift), shift=shift)


class Policy(BaseAoI):
    """ Represents a gamma-cutoff policy with a waiting threshold.

        Attributes:
            gamma (float): Cutoff time in ``[c, inf]``.
            theta (float): Waiting threshold in ``[c, gamma]``; ``theta == c`` is zero-wait.
            shift (float): Shift ``c`` of the service distribution the policy is for.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When ``c <= theta <= gamma`` does not hold.
    """
    _fields = ("gamma", "theta", "shift")

    def __init__(self, gamma: float, theta: float, shift: float = 0.0):
        super().__init__()
        gamma, theta, shift = float(gamma), float(theta), float(shift)
        if math.isnan(gamma) or math.isnan(theta) or shift < 0:
            raise ConfigError(f"Invalid Policy: gamma={gamma} theta={theta} c={shift}")
        if gamma < shift:
            raise ConfigError(f"Invalid Policy: gamma={gamma} is below c={shift}")
        if not shift <= theta <= gamma or math.isinf(theta):
            raise ConfigError(f"Invalid Policy: theta={theta} outside [c={shift}, gamma={gamma}]")
        self.gamma = gamma
        self.theta = theta
        self.shift = shift
        self._name = f"gamma={self.gamma},theta={self.theta}"
        self._loading = False

    @classmethod
    def zero_wait_policy(cls, gamma: float, shift: float = 0.0) -> "Policy":
        """ Zero-wait :class:`~aoicut.objs.Policy` with cutoff ``gamma``. """
        return cls(gamma, shift, shift=shift)

    @property
    def zero_wait(self) -> bool:
        return self.theta == self.shift


class EpochRecord(BaseAoI):
    """ Represents one simulated epoch, from one update delivery to the next.

        Attributes:
            start_age (float): Age when the epoch starts.
            wait (float): Idle waiting time before the first upload.
            uploads (int): Number of uploads, preempted ones included.
            busy (float): Server busy time ``(uploads - 1) * gamma + end_age``.
            end_age (float): Age right after the delivery that ends the epoch.
            length (float): Epoch length ``wait + busy``.
            area (float): Area under the age curve ``start_age * length + length^2 / 2``.
    """
    _fields = ("start_age", "wait", "uploads", "busy", "end_age", "length", "area")

    def __init__(self, start_age: float, wait: float, uploads: int, busy: float, end_age: float):
        super().__init__()
        self.start_age = float(start_age)
        self.wait = float(wait)
        self.uploads = int(uploads)
        self.busy = float(busy)
        self.end_age = float(end_age)
        self.length = self.wait + self.busy
        self.area = self.start_age * self.length + 0.5 * self.length ** 2
        self._name = f"N={self.uploads}"
        self._loading = False


class SimReport(BaseAoI):
    """ Represents the outcome of a renewal-reward simulation.

        Attributes:
            avg_aoi (float): Time average age ``sum(Q) / sum(L)`` after warmup.
            epochs (int): Epochs counted, warmup excluded, summed over replications.
            stderr (float): Batch means standard error of ``avg_aoi``.
            seed (int): Base seed.
            warmup (int): Epochs discarded at the start of each replication.
            batches (int): Batches per replication.
            replications (int): Independent replications pooled.
    """
    _fields = ("avg_aoi", "epochs", "stderr", "seed", "warmup", "batches", "replications")

    def __init__(self, avg_aoi: float, epochs: int, stderr: float, seed: int, warmup: int, batches: int,
                 replications: int = 1):
        super().__init__()
        self.avg_aoi = float(avg_aoi)
        self.epochs = int(epochs)
        self.stderr = float(stderr)
        self.seed = int(seed)
        self.warmup = int(warmup)
        self.batches = int(batches)
        self.replications = int(replications)
        self._name = f"aoi={self.avg_aoi}"
        self._loading = False


class SweepPoint(BaseAoI):
    """ Represents one cutoff value of a sweep.

        Attributes:
            gamma (float): Cutoff time.
            lambda_star (Optional[float]): AoI at that cutoff, None when the point failed.
            theta (Optional[float]): Waiting threshold, None when the point failed.
            zero_wait (Optional[bool]): If zero-wait was optimal, None when the point failed.
            error (Optional[str]): Failure message.
    """
    _fields = ("gamma", "lambda_star", "theta", "zero_wait", "error")

    def __init__(self, gamma: float, lambda_star: Optional[float] = None, theta: Optional[float] = None,
                 zero_wait: Optional[bool] = None, error: Optional[str] = None):
        super().__init__()
        self.gamma = float(gamma)
        self.lambda_star = None if lambda_star is None else float(lambda_star)
        self.theta = None if theta is None else float(theta)
        self.zero_wait = None if zero_wait is None else bool(zero_wait)
        self.error = error
        self._name = f"gamma={self.gamma}"
        self._loading = False

    @property
    def failed(self) -> bool:
        return self.lambda_star is None


class CutoffSweep(BaseAoI):
    """ Represents a cutoff sweep and its refined minimizer.

        Attributes:
            grid (List[SweepPoint]): Grid points in increasing gamma order.
            gamma_star (float): Best cutoff found.
            lambda_double_star (float): AoI at ``gamma_star``.
            theta_star (float): Waiting threshold at ``gamma_star``.
            zero_wait (bool): If zero-wait is optimal at ``gamma_star``.
            boundary (Optional[str]): ``"lower"`` or ``"upper"`` when the minimizer sits on the range edge.
            refined (bool): If golden-section refinement ran.
    """
    _fields = ("grid", "gamma_star", "lambda_double_star", "theta_star", "zero_wait", "boundary", "refined")

    def __init__(self, grid: List[SweepPoint], gamma_star: float, lambda_double_star: float, theta_star: float,
                 zero_wait: bool, boundary: Optional[str] = None, refined: bool = False):
        super().__init__()
        self.grid = list(grid)
        self.gamma_star = float(gamma_star)
        self.lambda_double_star = float(lambda_double_star)
        self.theta_star = float(theta_star)
        self.zero_wait = bool(zero_wait)
        self.boundary = boundary
        self.refined = bool(refined)
        self._name = f"gamma*={self.gamma_star}"
        self._loading = False

    @property
    def failures(self) -> List[SweepPoint]:
        return [point for point in self.grid if point.failed]


class Trajectory(BaseAoI):
    """ Represents a piecewise linear age sample path.

        Attributes:
            points (List[Tuple[float, float]]): Ordered ``(time, age)`` breakpoints; a delivery adds two points at the same time.
            preemptions (List[Tuple[float, float]]): ``(time, age)`` of every preemption.
            deliveries (List[Tuple[float, float]]): ``(time, age)`` right after every delivery.
            records (List[EpochRecord]): Epochs the path was built from.
    """
    _fields = ("points", "preemptions", "deliveries", "records")

    def __init__(self, points: List[Tuple[float, float]], preemptions: List[Tuple[float, float]],
                 deliveries: List[Tuple[float, float]], records: List[EpochRecord]):
        super().__init__()
        self.points = list(points)
        self.preemptions = list(preemptions)
        self.deliveries = list(deliveries)
        self.records = list(records)
        self._name = f"epochs={len(self.records)}"
        self._loading = False

    def area(self) -> float:
        """ Trapezoid area under the path. """
        total = 0.0
        for (t0, a0), (t1, a1) in zip(self.points, self.points[1:]):
            total += 0.5 * (a0 + a1) * (t1 - t0)
        return total

import os
from importlib.metadata import PackageNotFoundError, version

from .analysis import aoi_zero_wait, always_wait_aoi, epoch_stats, g_eval, policy_aoi, renewal_terms, solve_lambda, waiting_time, zero_wait_optimal
from .cutoff import c_sweep, compare_policies, crossover_scan, optimize_gamma, zero_wait_boundary
from .dist import Deterministic, Exponential, GenericDensity, ServiceDistribution, ShiftedExponential, erlang, parse_distribution, partial_moment, truncated_moments, truncation_prob
from .exceptions import AoIException, BisectionBracketFailure, ConfigError, DomainError, QuadratureFailure, TruncationMassZero
from .objs import CutoffSweep, EpochRecord, EpochStats, Policy, SimReport, SolveResult, SweepPoint, Trajectory, TruncatedAgeMoments
from .sim import export_trajectory, run_simulation, sample_epoch, simulate_epochs, upload_count_gof

try:
    __version__ = version("aoicut")
except PackageNotFoundError:
    _version_file = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "VERSION")
    __version__ = ""
    if os.path.exists(_version_file):
        with open(_version_file) as handle:
            for line in handle.readlines():
                line = line.strip()
                if len(line) > 0:
                    __version__ = line
                    break
__package_name__ = "aoicut"
__project_name__ = "AoICut"
__description__ = "Age of information optimal cutoff and waiting policies with a Monte Carlo oracle"
__license__ = "MIT License"
__all__ = [
    "ServiceDistribution",
    "Exponential",
    "ShiftedExponential",
    "Deterministic",
    "GenericDensity",
    "erlang",
    "parse_distribution",
    "truncation_prob",
    "truncated_moments",
    "partial_moment",
    "epoch_stats",
    "zero_wait_optimal",
    "aoi_zero_wait",
    "always_wait_aoi",
    "renewal_terms",
    "g_eval",
    "policy_aoi",
    "solve_lambda",
    "waiting_time",
    "optimize_gamma",
    "zero_wait_boundary",
    "compare_policies",
    "c_sweep",
    "crossover_scan",
    "sample_epoch",
    "simulate_epochs",
    "run_simulation",
    "export_trajectory",
    "upload_count_gof",
    "TruncatedAgeMoments",
    "EpochStats",
    "SolveResult",
    "Policy",
    "EpochRecord",
    "SimReport",
    "SweepPoint",
    "CutoffSweep",
    "Trajectory",
    "AoIException",
    "ConfigError",
    "DomainError",
    "TruncationMassZero",
    "QuadratureFailure",
    "BisectionBracketFailure"
]

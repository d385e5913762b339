import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from aoicut import util
from .analysis import policy_aoi, solve_lambda
from .cutoff import DEFAULT_GRID_POINTS, c_sweep, compare_policies, crossover_scan, optimize_gamma
from .dist import ServiceDistribution, parse_distribution
from .exceptions import AoIException, ConfigError, DomainError
from .objs import BaseAoI, Policy
from .output import format_options, render, write
from .sim import MIN_EPOCHS, export_trajectory, run_simulation, trajectory_rows

logger = logging.getLogger(__name__)

SEED_ENV = "AOI_SEED"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

command_options = ["solve", "sweep", "compare", "simulate"]
theta_options = ["auto", "zero"]

field_types = {
    "dist": "str",
    "gamma": "float",
    "theta": "str",
    "gamma_min": "float",
    "gamma_max": "float",
    "grid_points": "int",
    "c_values": "floatList",
    "rate": "float",
    "epochs": "int",
    "seed": "int",
    "warmup": "int",
    "batches": "int",
    "replications": "int",
    "workers": "int",
    "check": "bool",
    "trajectory": "str",
    "format": "str",
    "output": "str",
}

defaults = {
    "dist": None,
    "gamma": math.inf,
    "theta": "auto",
    "gamma_min": None,
    "gamma_max": None,
    "grid_points": DEFAULT_GRID_POINTS,
    "c_values": None,
    "rate": 1.0,
    "epochs": 100000,
    "seed": 0,
    "warmup": None,
    "batches": 100,
    "replications": 1,
    "workers": None,
    "check": False,
    "trajectory": None,
    "format": "csv",
    "output": None,
}


class RunConfig(BaseAoI):
    """ Represents the full set of options of one command.

        Unset options take the values in ``defaults``. The distribution token and the threshold are checked when the
        config is built, so nothing is computed for an invalid config.

        Parameters:
            command (str): One of solve, sweep, compare, or simulate.
            **values: Option values by name, raw strings or typed values; see ``field_types``.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When a value is invalid.
    """
    _fields = ("command",) + tuple(field_types)

    def __init__(self, command: str, **values):
        super().__init__()
        self.command = util.validate_options("Command", command, command_options)
        for key, value in values.items():
            util.validate_options("Option", key, list(field_types))
            if isinstance(value, str) and not value.strip():
                raise ConfigError(f"Invalid {key}: blank value")
        merged = {**defaults, **{k: v for k, v in values.items() if v is not None}}
        for key, value_type in field_types.items():
            setattr(self, key, util.parse(merged, attribute=key, value_type=value_type, default_is_none=True))
        self.format = util.validate_options("Format", self.format, format_options)
        self._check_counts()
        self._theta = self._check_theta()
        self._distribution = None
        if self.dist is not None:
            self._distribution = parse_distribution(self.dist)
        elif self.command in ["solve", "simulate"] or (self.command in ["sweep", "compare"] and not self.c_values):
            raise ConfigError(f"Invalid {self.command}: --dist is required")
        self._name = self.command
        self._loading = False

    def _check_counts(self):
        for key in ["grid_points", "epochs", "batches", "replications"]:
            if getattr(self, key) < 1:
                raise ConfigError(f"Invalid {key}: {getattr(self, key)}, must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"Invalid workers: {self.workers}, must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"Invalid seed: {self.seed}, must be in [0, 2^64)")
        if self.c_values and any(c < 0 for c in self.c_values):
            raise ConfigError(f"Invalid c_values: {self.c_values}, must be >= 0")

    def _check_theta(self):
        if self.theta in theta_options:
            return self.theta
        return util.parse(self.theta, attribute=None, value_type="float")

    @property
    def distribution(self) -> Optional[ServiceDistribution]:
        return self._distribution

    def policy(self) -> Policy:
        """ The simulated :class:`~aoicut.objs.Policy`: ``auto`` solves for the optimal threshold, ``zero`` is
            ``theta = c``, and a number is used as given.
        """
        dist = self.distribution
        if self._theta == "auto":
            return solve_lambda(dist, self.gamma).policy(dist.shift_c)
        if self._theta == "zero":
            return Policy.zero_wait_policy(self.gamma, dist.shift_c)
        return Policy(self.gamma, self._theta, shift=dist.shift_c)

    def to_text(self) -> str:
        """ Flat ``key=value`` lines of every option that is set; :meth:`from_text` reads them back. """
        lines = []
        for key in self._fields:
            value = getattr(self, key)
            if value is None or value == []:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, list):
                value = ",".join(str(util.format_number(v)) for v in value)
            lines.append(f"{key}={util.format_number(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """ Build a config from :meth:`to_text` output or a config file with a ``command`` line. """
        values = read_config_text(text)
        if "command" not in values:
            raise ConfigError("Invalid config: missing command")
        return cls(values.pop("command"), **values)


def read_config_text(text: str) -> Dict[str, str]:
    """ Parse ``key=value`` lines; blank lines and ``#`` comments are skipped and ``-`` in keys reads as ``_``.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When a line is malformed, a key is unknown, or a key repeats.
    """
    values = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            raise ConfigError(f"Invalid config line {number}: '{line}' Expected: key=value")
        util.validate_options("config key", key, ["command"] + list(field_types))
        if key in values:
            raise ConfigError(f"Invalid config line {number}: '{line}' Repeated key: {key}")
        values[key] = value.strip()
    return values


def load_config(command: str, flags: Dict[str, Any], config_path: Optional[str] = None,
                environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """ Merge defaults, ``AOI_SEED``, the config file, and command line flags, in increasing precedence.

        Parameters:
            command (str): Command to configure.
            flags (Dict[str, Any]): Flag values by option name, None when not given.
            config_path (Optional[str]): Flat ``key=value`` config file.
            environ (Optional[Dict[str, str]]): Environment, ``os.environ`` by default.

        Returns:
            :class:`RunConfig`: The merged config.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When any source holds an invalid value.
    """
    environ = os.environ if environ is None else environ
    values = {}
    if environ.get(SEED_ENV, "").strip():
        values["seed"] = util.parse(environ, attribute=SEED_ENV, value_type="int")
    if config_path:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Invalid config: {config_path}: {e}")
        file_values = read_config_text(text)
        if file_values.pop("command", command) != command:
            logger.warning(f"Config file {config_path} names another command; using {command}")
        values.update(file_values)
    values.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(command, **values)


def cmd_solve(config: RunConfig) -> List[Dict[str, Any]]:
    """ Optimal waiting for the configured cutoff: one row with lambda_star, theta, zero_wait, bracket and
        iterations.
    """
    result = solve_lambda(config.distribution, config.gamma)
    lo, hi = result.bracket if result.bracket else (None, None)
    return [{
        "gamma": result.gamma,
        "lambda_star": result.lambda_star,
        "theta": result.theta,
        "zero_wait": result.zero_wait,
        "bracket_lo": lo,
        "bracket_hi": hi,
        "iterations": result.iterations,
        "residual": result.residual,
    }]


def cmd_sweep(config: RunConfig) -> List[Dict[str, Any]]:
    """ Cutoff sweep: one ``grid`` row per cutoff then a ``best`` row, or the c-sweep table when c_values is set. """
    if config.c_values:
        return c_sweep(config.c_values, rate=config.rate, grid_points=config.grid_points, workers=config.workers)
    sweep = optimize_gamma(config.distribution, config.gamma_min, config.gamma_max, grid_points=config.grid_points,
                           workers=config.workers)
    rows = [{"row": "grid", "gamma": p.gamma, "lambda_star": p.lambda_star, "theta": p.theta,
             "zero_wait": p.zero_wait} for p in sweep.grid]
    rows.append({"row": "best", "gamma": sweep.gamma_star, "lambda_star": sweep.lambda_double_star,
                 "theta": sweep.theta_star, "zero_wait": sweep.zero_wait})
    if sweep.failures:
        logger.warning(f"{len(sweep.failures)} of {len(sweep.grid)} grid points failed")
    return rows


def cmd_compare(config: RunConfig) -> List[Dict[str, Any]]:
    """ The four-policy table, or the crossover table over c_values. """
    if config.c_values:
        return crossover_scan(config.c_values, rate=config.rate, grid_points=config.grid_points,
                              workers=config.workers)
    table = compare_policies(config.distribution, config.gamma_min, config.gamma_max,
                             grid_points=config.grid_points, workers=config.workers)
    return [{"policy": name, "avg_aoi": value} for name, value in table]


def cmd_simulate(config: RunConfig) -> List[Dict[str, Any]]:
    """ Simulate the configured policy. Writes the trajectory file when one is set; the report is skipped when
        fewer than 1000 epochs are asked for.
    """
    dist = config.distribution
    policy = config.policy()
    logger.info(f"Simulating {dist.token} with {policy}")
    if config.trajectory:
        trajectory = export_trajectory(policy, dist, config.epochs, config.seed)
        write(render(trajectory_rows(trajectory), config.format, ["t", "age"]), config.trajectory)
        if config.epochs < MIN_EPOCHS:
            logger.info(f"{config.epochs} epochs is below {MIN_EPOCHS}; report skipped")
            return []
    report = run_simulation(policy, dist, config.epochs, config.seed, warmup=config.warmup, batches=config.batches,
                            replications=config.replications, workers=config.workers)
    row = {"gamma": policy.gamma, "theta": policy.theta, **report.to_dict()}
    if config.check:
        if config.theta == "auto":
            analytic = solve_lambda(dist, policy.gamma).lambda_star
        else:
            analytic = policy_aoi(dist, policy)
        row["analytic"] = analytic
        row["gap_stderr"] = abs(report.avg_aoi - analytic) / report.stderr if report.stderr > 0 else 0.0
    return [row]


commands = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dist", help="service time token, e.g. exp:rate=1, sexp:rate=1,c=0.5, det:c=1")
    common.add_argument("--format", choices=format_options, help="output format (default csv)")
    common.add_argument("--output", help="output path (default standard output)")
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")

    sweep_range = argparse.ArgumentParser(add_help=False)
    sweep_range.add_argument("--gamma-min", help="smallest cutoff swept")
    sweep_range.add_argument("--gamma-max", help="largest cutoff swept")
    sweep_range.add_argument("--grid-points", help="grid points per sweep")
    sweep_range.add_argument("--c-values", help="comma separated shifts of a shifted exponential")
    sweep_range.add_argument("--rate", help="rate of the shifted exponential swept with --c-values")

    parser = argparse.ArgumentParser(prog="aoicut", description="Age of information optimal cutoff and waiting.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", parents=[common], help="optimal waiting for one cutoff")
    solve.add_argument("--gamma", help="cutoff time, inf for none")

    subparsers.add_parser("sweep", parents=[common, sweep_range], help="optimize the cutoff")
    subparsers.add_parser("compare", parents=[common, sweep_range], help="optimal policy against baselines")

    simulate = subparsers.add_parser("simulate", parents=[common], help="Monte Carlo estimate of a policy")
    simulate.add_argument("--gamma", help="cutoff time, inf for none")
    simulate.add_argument("--theta", help="auto, zero, or a waiting threshold")
    simulate.add_argument("--epochs", help="epochs per replication")
    simulate.add_argument("--seed", help=f"seed, {SEED_ENV} by default")
    simulate.add_argument("--warmup", help="epochs discarded per replication")
    simulate.add_argument("--batches", help="batches per replication")
    simulate.add_argument("--replications", help="independent replications")
    simulate.add_argument("--check", action="store_true", default=None, help="report the gap to the analytic value")
    simulate.add_argument("--trajectory", help="write the age sample path to this path")
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """ Run one command.

        Returns:
            int: 0 on success, 2 for invalid configuration, 3 for a numerical failure.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    flags = {key: getattr(args, key) for key in field_types if hasattr(args, key)}
    try:
        config = load_config(args.command, flags, args.config)
        logger.debug(f"Config:\n{config.to_text()}")
        rows = commands[config.command](config)
        if rows:
            write(render(rows, config.format), config.output)
    except (ConfigError, DomainError) as e:
        sys.stderr.write(f"aoicut: error: {e}\n")
        return EXIT_CONFIG
    except AoIException as e:
        sys.stderr.write(f"aoicut: error: {e}\n")
        return EXIT_NUMERIC
    except OSError as e:
        sys.stderr.write(f"aoicut: error: {e}\n")
        return EXIT_CONFIG
    return EXIT_OK

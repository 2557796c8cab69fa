"""
Experiment Configuration

Experiments are described by flat KEY=VALUE files (read with python-dotenv)
whose values can be overridden from the command line. See .env.example
for every key.
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional
import logging

from dotenv import dotenv_values

from src.mrj.errors import ConfigError
from src.mrj.models import Grid
from src.mrj.policies import BACKFILL_ORDERS, POLICY_NAMES, is_discretized, split_backfill
from src.mrj.requirements import RequirementDist, parse_distribution
from src.mrj.trace.schema import QUANTILE_METHODS, TraceSpec

logger = logging.getLogger(__name__)

TRUE_VALUES = ("1", "true", "yes", "on")


@dataclass(frozen=True)
class PolicySpec:
    """A policy name with an optional discretization, written 'name@K'."""

    name: str
    grid: Optional[Grid] = None

    @classmethod
    def parse(cls, text: str, default_K: Optional[str] = None) -> "PolicySpec":
        name, _, K = text.strip().partition("@")
        K = K.strip() or (default_K if is_discretized(name) else None)
        try:
            grid = Grid.parse(K) if K else None
        except ValueError as e:
            raise ConfigError("K", f"cannot parse '{K}' for policy '{name}': {e}")
        return cls(name.strip().lower(), grid)

    @property
    def K_label(self) -> str:
        return self.grid.label() if self.grid else ""

    def __str__(self) -> str:
        return f"{self.name}@{self.K_label}" if self.grid else self.name


def _floats(text: str, key: str) -> List[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(key, f"expected numbers, got '{text}'")


def _number(data: Mapping[str, Optional[str]], key: str, cast, default):
    value = data.get(key)
    if value is None or str(value).strip() == "":
        return default
    try:
        return cast(str(value).strip())
    except ValueError:
        raise ConfigError(key, f"cannot parse '{value}'")


@dataclass
class ExperimentConfig:
    """
    A sweep over policies and loads.

    Attributes:
        distribution: Requirement distribution string, e.g. 'uniform'
        lambdas: Arrival rates to run
        rhos: Loads to run; lambda = rho * lambda*
        lambda_star: Stability boundary (built-in value used when omitted)
        policies: Policies to run, each with its own discretization
        K: Default discretization for policies without '@K'
        jobs: Arrivals per run
        seed: Base seed; run j of each policy uses seed + j
        out: Results CSV path
        workers: Parallel worker processes
        theta: nMSR switch rate
        epsilon: Margin of explicit constructions
        max_queue: Instability cutoff on jobs in system
        max_mrt: Instability cutoff on the running mean response time
        warmup: Leading jobs excluded from the mean
        backfill_order: 'arrival', 'increasing' or 'decreasing'
        use_lp: Precompute nMSR mixes with the LP
        trace: Trace replacing the distribution, if any
    """

    distribution: str = "uniform"
    lambdas: List[float] = field(default_factory=list)
    rhos: List[float] = field(default_factory=list)
    lambda_star: Optional[float] = None
    policies: List[PolicySpec] = field(default_factory=list)
    K: Optional[str] = None
    jobs: int = 1_000_000
    seed: int = 0
    out: str = "results.csv"
    workers: int = 1
    theta: float = 0.1
    epsilon: float = 1e-3
    max_queue: int = 10_000
    max_mrt: float = 1_000.0
    warmup: int = 0
    backfill_order: str = "arrival"
    use_lp: bool = False
    trace: Optional[TraceSpec] = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Optional[str]]) -> "ExperimentConfig":
        """Create ExperimentConfig from upper-case KEY -> string values."""
        data = {k.upper(): v for k, v in data.items()}
        K = (data.get("K") or "").strip() or None
        policies = [PolicySpec.parse(p, K) for p in (data.get("POLICIES") or "").replace(",", " ").split()]

        trace = None
        if data.get("TRACE_PATH"):
            quantile = _number(data, "QUANTILE", float, None)
            trace = TraceSpec(
                path=str(data["TRACE_PATH"]).strip(),
                column=(data.get("TRACE_COLUMN") or "0").strip(),
                max_rows=_number(data, "MAX_ROWS", int, 1_000_000),
                drop_frac=_number(data, "DROP_FRAC", float, 0.10),
                quantile=quantile,
                quantile_method=(data.get("QUANTILE_METHOD") or "nearest-rank").strip(),
            )

        return cls(
            distribution=(data.get("DISTRIBUTION") or "uniform").strip(),
            lambdas=_floats(data.get("LAMBDAS") or "", "LAMBDAS"),
            rhos=_floats(data.get("RHOS") or "", "RHOS"),
            lambda_star=_number(data, "LAMBDA_STAR", float, None),
            policies=policies,
            K=K,
            jobs=_number(data, "JOBS", int, 1_000_000),
            seed=_number(data, "SEED", int, 0),
            out=(data.get("OUT") or "results.csv").strip(),
            workers=_number(data, "WORKERS", int, 1),
            theta=_number(data, "THETA", float, 0.1),
            epsilon=_number(data, "EPSILON", float, 1e-3),
            max_queue=_number(data, "MAX_QUEUE", int, 10_000),
            max_mrt=_number(data, "MAX_MRT", float, 1_000.0),
            warmup=_number(data, "WARMUP", int, 0),
            backfill_order=(data.get("BACKFILL_ORDER") or "arrival").strip().lower(),
            use_lp=str(data.get("USE_LP") or "").strip().lower() in TRUE_VALUES,
            trace=trace,
        )

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> "ExperimentConfig":
        """
        Read a KEY=VALUE file and apply overrides.

        Args:
            path: Config file (defaults only when None)
            overrides: Upper-case keys whose non-None values replace the file's

        Raises:
            FileNotFoundError: If path doesn't exist
            ConfigError: If a value cannot be parsed
        """
        data: Dict[str, Optional[str]] = {}
        if path is not None:
            if not Path(path).exists():
                raise FileNotFoundError(f"Config file not found: {path}")
            data.update(dotenv_values(path))
            logger.info(f"Loaded {len(data)} config keys from {path}")
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key.upper()] = str(value)
        return cls.from_dict(data)

    def dist(self) -> RequirementDist:
        try:
            return parse_distribution(self.distribution)
        except ValueError as e:
            raise ConfigError("DISTRIBUTION", str(e))

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        names = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in changes.items() if k in names and v is not None})


def _check_grid(spec: PolicySpec, d: int) -> Optional[str]:
    base, _ = split_backfill(spec.name)
    grid = spec.grid
    if grid is None:
        return f"K: policy '{spec.name}' needs a discretization level"
    if grid.d != d:
        return f"K: policy '{spec}' has {grid.d} resources, the distribution has {d}"
    if base.startswith("2b"):
        if d != 1:
            return f"K: policy '{spec.name}' is defined for a single resource only"
        K = grid.K[0]
        if K & (K - 1):
            return f"K: K must be a power of two for '{spec.name}', got {K}"
    if base.startswith("xp"):
        if d != 1:
            return f"K: policy '{spec.name}' is defined for a single resource only"
        if grid.K[0] % 2:
            return f"K: K must be even for '{spec.name}', got {grid.K[0]}"
    return None


def validate_experiment_config(config: ExperimentConfig) -> tuple[bool, Optional[str]]:
    """
    Validate an experiment config; messages name the offending field.

    Args:
        config: ExperimentConfig to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(config, ExperimentConfig):
        return False, "Not an ExperimentConfig instance"

    if config.trace is None:
        try:
            d = config.dist().d
        except ConfigError as e:
            return False, str(e)
    else:
        d = 1
        if config.trace.quantile_method not in QUANTILE_METHODS:
            return False, f"QUANTILE_METHOD: must be one of {list(QUANTILE_METHODS)}"

    if not config.lambdas and not config.rhos:
        return False, "LAMBDAS: give arrival rates (LAMBDAS) or loads (RHOS)"
    if config.lambdas and config.rhos:
        return False, "RHOS: give either LAMBDAS or RHOS, not both"
    if any(x <= 0 for x in config.lambdas + config.rhos):
        return False, "LAMBDAS: arrival rates and loads must be positive"
    if config.lambda_star is not None and config.lambda_star <= 0:
        return False, "LAMBDA_STAR: must be positive"

    if not config.policies:
        return False, "POLICIES: at least one policy is required"
    for spec in config.policies:
        base, _ = split_backfill(spec.name)
        if spec.name not in POLICY_NAMES:
            return False, f"POLICIES: unknown policy '{spec.name}'"
        if is_discretized(spec.name):
            error = _check_grid(spec, d)
            if error:
                return False, error
        elif base == "pseudo-mw" and d != 1:
            return False, "POLICIES: pseudo-mw is defined for a single resource only"

    if config.jobs < 1:
        return False, "JOBS: must be at least 1"
    if config.workers < 1:
        return False, "WORKERS: must be at least 1"
    if not config.theta > 0:
        return False, "THETA: switch rate must be positive"
    if not config.epsilon > 0:
        return False, "EPSILON: must be positive"
    if config.max_queue < 1 or not config.max_mrt > 0:
        return False, "MAX_QUEUE: instability cutoffs must be positive"
    if config.warmup < 0:
        return False, "WARMUP: must be nonnegative"
    if config.backfill_order not in BACKFILL_ORDERS:
        return False, f"BACKFILL_ORDER: must be one of {list(BACKFILL_ORDERS)}"

    return True, None

"""
Dominance Lab

Arrival-rate vectors, discretized service measures and the dominance check
that certifies stability of a K-discretized policy, together with the two
explicit service-mix constructions (2-Bucket and 2-Job) and a max-margin
LP over an arbitrary candidate set.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from src.mrj.discretization import efficient_set_2J, two_bucket_options
from src.mrj.errors import (
    ConfigError,
    ConstructionInfeasibleError,
    DimensionMismatchError,
    EnumerationTooLargeError,
    MassOverflowError,
    NoStableKError,
)
from src.mrj.models import CandidateSet, Grid, ServiceOption, TypeIndex, as_type_index, option_fits
from src.mrj.requirements import ArrivalSpec

from .calculations import select_K_2B, select_K_2J
from .simplex import solve_max

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-3
DEFAULT_LP_CAP = 10_000
MASS_TOL = 1e-12
DECREASE_TOL = 1e-12


@dataclass
class RateVector:
    """
    Per-type arrival rates Lambda_K(i), stored in the grid's flat type order.

    Attributes:
        grid: Discretization the rates refer to
        rates: Nonnegative rates, shape (grid.num_types,)
    """

    grid: Grid
    rates: np.ndarray

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if self.rates.shape != (self.grid.num_types,):
            raise DimensionMismatchError(
                f"Rate vector has shape {self.rates.shape}, grid K={self.grid.K} needs ({self.grid.num_types},)"
            )
        if np.any(self.rates < 0):
            raise ValueError("Arrival rates must be nonnegative")

    @classmethod
    def from_spec(cls, spec: ArrivalSpec, grid: Grid) -> "RateVector":
        masses = spec.dist.bucket_masses(grid.K)
        return cls(grid, spec.lam * np.asarray(masses, dtype=float))

    def get(self, t: Any) -> float:
        return float(self.rates[self.grid.flat_index(as_type_index(t))])

    @property
    def total(self) -> float:
        return float(self.rates.sum())

    def positive_types(self) -> List[TypeIndex]:
        return [self.grid.type_at(int(i)) for i in np.nonzero(self.rates > 0)[0]]


def arrival_rate_vector(spec: ArrivalSpec, grid: Grid) -> RateVector:
    """Lambda_K(i) = lambda * P(job type = i)."""
    return RateVector.from_spec(spec, grid)


@dataclass
class ServiceMix:
    """
    A probability distribution over service options; the unassigned mass
    is the idle probability.

    Attributes:
        grid: Discretization the options refer to
        weights: Option -> probability beta(M) >= 0
    """

    grid: Grid
    weights: Dict[ServiceOption, float] = field(default_factory=dict)

    def __post_init__(self):
        for option, w in self.weights.items():
            if w < -MASS_TOL:
                raise ValueError(f"Negative weight {w} on {option.to_text()}")
            if not option_fits(option, self.grid):
                raise ValueError(f"Infeasible option {option.to_text()} for K={self.grid.K}")
        self.weights = {o: max(0.0, float(w)) for o, w in self.weights.items()}
        if self.total_mass > 1.0 + MASS_TOL:
            raise MassOverflowError(self.total_mass)

    @property
    def total_mass(self) -> float:
        return float(sum(self.weights.values()))

    @property
    def slack(self) -> float:
        return max(0.0, 1.0 - self.total_mass)

    @property
    def support(self) -> List[ServiceOption]:
        """Options with positive weight, in insertion order."""
        return [o for o, w in self.weights.items() if w > 0]

    def normalized(self) -> Tuple[List[ServiceOption], np.ndarray]:
        """Support options with weights rescaled to sum to one."""
        options = self.support
        if not options:
            return [], np.zeros(0)
        probs = np.array([self.weights[o] for o in options], dtype=float)
        return options, probs / probs.sum()

    def __len__(self) -> int:
        return len(self.support)

    def to_dict(self) -> Dict[str, float]:
        return {o.to_text(): w for o, w in self.weights.items()}


def service_measure(mix: ServiceMix) -> np.ndarray:
    """eta_S(i) = sum_M beta(M) M^(i), in flat type order."""
    eta = np.zeros(mix.grid.num_types)
    for option, w in mix.weights.items():
        if w > 0:
            eta += w * option.dense(mix.grid)
    return eta


@dataclass
class DominanceReport:
    """
    Outcome of a dominance check.

    Attributes:
        delta: min over positive-rate types of eta_S(i) / Lambda(i) - 1
        per_type: (type, arrival rate, service rate) rows in flat type order
    """

    delta: float
    per_type: List[Tuple[TypeIndex, float, float]] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.delta > 0

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for t, rate, service in self.per_type:
            rows.append({
                "type": ",".join(str(x) for x in t),
                "arrival_rate": rate,
                "service_rate": service,
                "ratio": service / rate if rate > 0 else math.nan,
            })
        return pd.DataFrame(rows, columns=["type", "arrival_rate", "service_rate", "ratio"])

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format="%.10g")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "satisfied": self.satisfied,
            "per_type": [
                {"type": list(t), "arrival_rate": r, "service_rate": s} for t, r, s in self.per_type
            ],
        }


def check_dominance(mix: ServiceMix, rates: RateVector) -> DominanceReport:
    """
    Evaluate the discrete measure dominance condition.

    Types with zero arrival rate do not enter the minimum. If no type has
    a positive rate, delta is +inf.
    """
    if mix.grid != rates.grid:
        raise DimensionMismatchError(f"Mix grid K={mix.grid.K} differs from rate grid K={rates.grid.K}")
    eta = service_measure(mix)
    positive = rates.rates > 0
    if positive.any():
        delta = float(np.min(eta[positive] / rates.rates[positive]) - 1.0)
    else:
        delta = math.inf
    per_type = [
        (rates.grid.type_at(i), float(rates.rates[i]), float(eta[i])) for i in range(rates.grid.num_types)
    ]
    return DominanceReport(delta=delta, per_type=per_type)


def _check_weakly_decreasing(p: np.ndarray) -> None:
    rises = np.nonzero(np.diff(p) > DECREASE_TOL)[0]
    if rises.size:
        k = int(rises[0]) + 1
        raise ConstructionInfeasibleError(
            f"Bucket masses must be weakly decreasing: p_{k}={p[k - 1]:.6g} < p_{k + 1}={p[k]:.6g}"
        )


def _required_K_2B(lam: float, mean_v: float) -> Optional[int]:
    try:
        return select_K_2B(lam, mean_v)
    except NoStableKError:
        return None


def construct_beta_2B(
    p: Sequence[float],
    lam: float,
    epsilon: float = DEFAULT_EPSILON,
    mean_v: Optional[float] = None,
) -> ServiceMix:
    """
    Explicit 2-Bucket service mix for weakly decreasing bucket masses.

    Round 0 takes p; round r sets, for 1 <= j < 2^(L-r),
    p^(r)_j = p^(r-1)_j - p^(r-1)_(2^(L-r+1)-j) and keeps p^(r)_(2^(L-r)).
    Option M_k gets beta_k = (1+eps) lam p^(L-l(k))_k / 2^(L-l(k)) with
    l(k) = ceil(log2 k), so that eta_S(k) = (1+eps) lam p_k for every k.

    Args:
        p: Bucket masses p_1..p_K with K = 2^L
        lam: Arrival rate
        epsilon: Dominance margin
        mean_v: E V used for the required-K hint (rounded-up mean if omitted)

    Raises:
        ConstructionInfeasibleError: If p is not weakly decreasing
        MassOverflowError: If the weights sum to more than one
    """
    masses = np.asarray(p, dtype=float)
    K = masses.size
    grid = Grid.of(K)
    options = two_bucket_options(grid)
    L = K.bit_length() - 1
    _check_weakly_decreasing(masses)

    # rounds[r][j] holds p^(r)_j, 1-indexed
    rounds: List[np.ndarray] = [np.concatenate(([0.0], masses))]
    for r in range(1, L + 1):
        prev = rounds[-1]
        half = 2 ** (L - r)
        cur = prev.copy()
        for j in range(1, half):
            cur[j] = prev[j] - prev[2 * half - j]
            if cur[j] < -DECREASE_TOL:
                raise ConstructionInfeasibleError(f"Negative intermediate mass p^({r})_{j} = {cur[j]:.6g}")
        rounds.append(cur)

    scale = (1.0 + epsilon) * lam
    weights: Dict[ServiceOption, float] = {}
    for k in range(1, K + 1):
        depth = L - (k - 1).bit_length()
        weights[options[k]] = scale * max(0.0, rounds[depth][k]) / 2 ** depth

    total = sum(weights.values())
    if total > 1.0 + MASS_TOL:
        mean = mean_v if mean_v is not None else float(np.dot(masses, np.arange(1, K + 1)) / K)
        raise MassOverflowError(total, _required_K_2B(scale, mean))

    logger.debug(f"2B construction for K={K}: total mass {total:.6f}")
    return ServiceMix(grid, weights)


def construct_beta_2J(rates: RateVector, grid: Optional[Grid] = None, epsilon: float = DEFAULT_EPSILON) -> ServiceMix:
    """
    Explicit 2-Job service mix for odd K.

    Boundary singletons get (1+eps) Lambda(i); the pair option serving j and
    K - j gets (1+eps) max(Lambda(j), Lambda(K - j)).

    Raises:
        ConfigError: If some K_l is even
        MassOverflowError: If the weights sum to more than one
    """
    grid = grid or rates.grid
    if grid != rates.grid:
        raise DimensionMismatchError(f"Grid K={grid.K} differs from rate grid K={rates.grid.K}")
    if any(k % 2 == 0 for k in grid.K):
        raise ConfigError("K", f"the 2-Job construction needs odd K, got {grid.label()}")

    scale = 1.0 + epsilon
    weights: Dict[ServiceOption, float] = {}
    for option in efficient_set_2J(grid):
        served = [t for t, _ in option.counts]
        weights[option] = scale * max(rates.get(t) for t in served)

    total = sum(weights.values())
    if total > 1.0 + MASS_TOL:
        required = None
        if grid.d == 1:
            try:
                required = select_K_2J(rates.total, 1)
            except NoStableKError:
                pass
        raise MassOverflowError(total, required)

    logger.debug(f"2J construction for K={grid.K}: total mass {total:.6f}")
    return ServiceMix(grid, weights)


def max_dominance_lp(
    rates: RateVector,
    candidates: CandidateSet,
    cap: int = DEFAULT_LP_CAP,
) -> Tuple[float, ServiceMix]:
    """
    Largest dominance margin achievable with a mix over the candidates.

    Solves: maximize t subject to t Lambda(i) <= sum_M beta(M) M^(i) for
    every positive-rate type, sum beta <= 1, beta >= 0; delta* = t - 1.

    Returns:
        (delta*, optimal mix); delta* is -1 with an empty mix when some
        positive-rate type is served by no candidate, and +inf when every
        rate is zero

    Raises:
        EnumerationTooLargeError: If the candidate set exceeds cap
    """
    if candidates.grid != rates.grid:
        raise DimensionMismatchError(f"Candidate grid K={candidates.grid.K} differs from rate grid K={rates.grid.K}")
    if len(candidates) > cap:
        raise EnumerationTooLargeError(cap, what="LP columns")

    grid = rates.grid
    positive = np.nonzero(rates.rates > 0)[0]
    if positive.size == 0:
        return math.inf, ServiceMix(grid)

    M = candidates.matrix[:, positive].astype(float)
    if np.any(M.sum(axis=0) == 0):
        logger.info("Some positive-rate type is served by no candidate option")
        return -1.0, ServiceMix(grid)

    n = len(candidates)
    m = positive.size
    # columns: beta_1..beta_n, t
    A = np.zeros((m + 1, n + 1))
    A[:m, :n] = -M.T
    A[:m, n] = rates.rates[positive]
    A[m, :n] = 1.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    c = np.zeros(n + 1)
    c[n] = 1.0

    result = solve_max(c, A, b)
    if not result.ok:
        logger.warning(f"Dominance LP ended with status {result.status.value}; using the last basis")

    beta = result.x[:n]
    weights = {candidates.options[i]: float(beta[i]) for i in np.nonzero(beta > 1e-15)[0]}
    mass = sum(weights.values())
    if mass > 1.0:
        weights = {o: w / mass for o, w in weights.items()}
    delta = float(result.x[n]) - 1.0
    logger.info(f"Dominance LP over {n} options: delta* = {delta:.6g} ({result.iterations} pivots)")
    return delta, ServiceMix(grid, weights)

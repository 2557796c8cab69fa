"""
Scheduling Policies

Discretized MaxWeight over any candidate set, the backfilling wrapper,
K-nMSR driven by a modulating option process, and the index-based
packing heuristics (FCFS, First-Fit, Best-Fit, LSF, Pseudo-MW).

A policy maps the current SystemState to a Schedule. Preemptive policies
recompute the served set from scratch; nMSR keeps every job already in
service and only decides which waiting jobs to start.
"""

from abc import ABC, abstractmethod
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple
import logging

import numpy as np

from src.lab.dominance import (
    RateVector,
    ServiceMix,
    check_dominance,
    construct_beta_2B,
    construct_beta_2J,
    max_dominance_lp,
)

from .discretization import build_candidates
from .errors import (
    ConfigError,
    ConstructionInfeasibleError,
    MassOverflowError,
    NotStabilizableError,
)
from .models import CandidateSet, Grid, Job, Schedule, ServiceOption, TypeIndex
from .requirements import ArrivalSpec

logger = logging.getLogger(__name__)

FIT_TOL = 1e-12
DEFAULT_THETA = 0.1
BACKFILL_ORDERS = ("arrival", "increasing", "decreasing")


class SystemState:
    """
    Jobs in system, in arrival order, with per-type bookkeeping.

    Attributes:
        grid: Active discretization (None for index policies)
        jobs: Job id -> Job, in arrival order
        in_service: Ids of the jobs currently served
    """

    def __init__(self, grid: Optional[Grid] = None):
        self.grid = grid
        self.jobs: Dict[int, Job] = {}
        self.in_service: Set[int] = set()
        self._by_type: Dict[TypeIndex, Dict[int, None]] = {}
        self._q = np.zeros(grid.num_types if grid else 0, dtype=np.int64)

    def add(self, job: Job) -> None:
        self.jobs[job.id] = job
        if self.grid is not None:
            self._by_type.setdefault(job.job_type, {})[job.id] = None
            self._q[self.grid.flat_index(job.job_type)] += 1

    def remove(self, job_id: int) -> Job:
        job = self.jobs.pop(job_id)
        self.in_service.discard(job_id)
        if self.grid is not None:
            del self._by_type[job.job_type][job_id]
            self._q[self.grid.flat_index(job.job_type)] -= 1
        return job

    @property
    def q(self) -> np.ndarray:
        """Number of jobs of each type, flat type order."""
        return self._q

    def jobs_of_type(self, t: TypeIndex) -> Iterable[int]:
        """Ids of type-t jobs, oldest first."""
        return self._by_type.get(t, {}).keys()

    def requirement(self, job_id: int) -> Tuple[float, ...]:
        return self.jobs[job_id].requirement

    @property
    def d(self) -> int:
        if self.grid is not None:
            return self.grid.d
        for job in self.jobs.values():
            return len(job.requirement)
        return 1

    def __len__(self) -> int:
        return len(self.jobs)


def _usage(state: SystemState, ids: Iterable[int]) -> List[float]:
    used = [0.0] * state.d
    for i in ids:
        for l, x in enumerate(state.requirement(i)):
            used[l] += x
    return used


def _fits(req: Sequence[float], used: List[float]) -> bool:
    return all(u + x <= 1.0 + FIT_TOL for u, x in zip(used, req))


def _pack(
    state: SystemState,
    order: Iterable[int],
    served: List[int],
    used: List[float],
    stop_on_misfit: bool = False,
) -> List[int]:
    """Greedily add jobs from order while they fit; served and used are extended in place."""
    for i in order:
        req = state.requirement(i)
        if _fits(req, used):
            served.append(i)
            for l, x in enumerate(req):
                used[l] += x
        elif stop_on_misfit:
            break
    return served


# =============================================================================
# MaxWeight and backfilling
# =============================================================================

def maxweight_select(q: np.ndarray, candidates: CandidateSet) -> ServiceOption:
    """
    argmax <M, q> over the candidates.

    Ties go to the option serving more jobs, then to the lexicographically
    smallest count vector. A maximum of zero returns the zero option.
    """
    if len(candidates) == 0:
        return ServiceOption()
    ranked = candidates.ranked
    values = candidates.ranked_matrix @ np.asarray(q, dtype=np.int64)
    best = int(np.argmax(values))
    if values[best] <= 0:
        return ServiceOption()
    return candidates.options[int(ranked[best])]


def realize_option(state: SystemState, option: ServiceOption) -> Schedule:
    """Serve min(q_i, M^(i)) jobs of each type i, oldest first."""
    served: List[int] = []
    for t, count in option.counts:
        for n, job_id in enumerate(state.jobs_of_type(t)):
            if n >= count:
                break
            served.append(job_id)
    return Schedule(served=served, option=option)


def _backfill_order(state: SystemState, candidates: Iterable[int], order: str) -> List[int]:
    ids = list(candidates)
    if order == "arrival":
        return ids
    if order == "increasing":
        return sorted(ids, key=lambda i: max(state.requirement(i)))
    if order == "decreasing":
        return sorted(ids, key=lambda i: -max(state.requirement(i)))
    raise ConfigError("BACKFILL_ORDER", f"unknown order '{order}', expected one of {BACKFILL_ORDERS}")


def backfill(state: SystemState, base: Schedule, order: str = "arrival") -> Schedule:
    """
    Add waiting jobs that fit the leftover true capacity.

    Scans jobs outside the base schedule (in arrival order by default) and
    adds each one whose requirement fits what the selected jobs leave free.
    The base jobs are never removed.
    """
    served = list(base.served)
    chosen = set(served)
    used = _usage(state, served)
    if all(u >= 1.0 - FIT_TOL for u in used):
        return Schedule(served=served, option=base.option)
    rest = _backfill_order(state, (i for i in state.jobs if i not in chosen), order)
    _pack(state, rest, served, used)
    return Schedule(served=served, option=base.option)


# =============================================================================
# Index policies
# =============================================================================

class IndexKind(Enum):
    FCFS = "fcfs"
    FIRST_FIT = "first-fit"
    BEST_FIT = "best-fit"
    LSF = "lsf"


def index_select(kind: IndexKind, state: SystemState) -> Schedule:
    """
    Greedy packing in a policy-specific scan order.

    FCFS scans in arrival order and stops at the first misfit. First-Fit
    scans in arrival order and skips misfits. Best-Fit scans by decreasing
    requirement and skips misfits. LSF scans by increasing requirement and
    stops at the first misfit when d = 1; for d >= 2 it orders by the
    largest coordinate and scans everything.
    """
    ids = list(state.jobs)
    served: List[int] = []
    used = [0.0] * state.d
    if kind is IndexKind.FCFS:
        return Schedule(_pack(state, ids, served, used, stop_on_misfit=True))
    if kind is IndexKind.FIRST_FIT:
        return Schedule(_pack(state, ids, served, used))
    if kind is IndexKind.BEST_FIT:
        ordered = sorted(ids, key=lambda i: -max(state.requirement(i)))
        return Schedule(_pack(state, ordered, served, used))
    if kind is IndexKind.LSF:
        ordered = sorted(ids, key=lambda i: max(state.requirement(i)))
        return Schedule(_pack(state, ordered, served, used, stop_on_misfit=state.d == 1))
    raise ValueError(f"Unknown index policy {kind}")


def pseudo_mw_select(state: SystemState) -> Schedule:
    """
    Pack groups of equal requirement in increasing order of r / n(r).

    n(r) is the number of jobs in system with requirement exactly r; ties
    go to the smaller r. Jobs inside a group are taken oldest first and
    misfits are skipped.
    """
    groups: Dict[float, List[int]] = {}
    for i, job in state.jobs.items():
        groups.setdefault(job.requirement[0], []).append(i)
    order = sorted(groups, key=lambda r: (r / len(groups[r]), r))
    served: List[int] = []
    used = [0.0]
    for r in order:
        _pack(state, groups[r], served, used)
    return Schedule(served)


# =============================================================================
# nMSR
# =============================================================================

class NMSRMethod(Enum):
    LP = "lp"
    CONSTRUCTION_2B = "2b"
    CONSTRUCTION_2J = "2j"


def nmsr_precompute(
    rates: RateVector,
    candidates: CandidateSet,
    method: NMSRMethod = NMSRMethod.LP,
    epsilon: float = 1e-3,
) -> ServiceMix:
    """
    Offline choice of the service mix driving an nMSR policy.

    Raises:
        NotStabilizableError: If the mix does not strictly dominate the rates
        ConfigError: If a construction uses options outside the candidates
    """
    if method is NMSRMethod.LP:
        delta, mix = max_dominance_lp(rates, candidates)
    else:
        if method is NMSRMethod.CONSTRUCTION_2B:
            lam = rates.total
            mix = construct_beta_2B(rates.rates / lam, lam, epsilon)
        else:
            mix = construct_beta_2J(rates, candidates.grid, epsilon)
        missing = [o for o in mix.support if o not in candidates]
        if missing:
            raise ConfigError("set", f"construction uses {missing[0].to_text()} outside the candidate set")
        delta = check_dominance(mix, rates).delta

    if not delta > 0:
        raise NotStabilizableError(delta)
    logger.info(f"nMSR mix over {len(mix)} options with delta {delta:.6g} ({method.value})")
    return mix


def nmsr_step(
    current: Optional[ServiceOption],
    rng: np.random.Generator,
    mix: ServiceMix,
    theta: float = DEFAULT_THETA,
) -> ServiceOption:
    """
    Next option of the modulating chain after a jump.

    The chain jumps at rate theta; each jump resamples from the mix
    restricted to its support and renormalized, so its stationary law is
    the normalized mix.
    """
    if not theta > 0:
        raise ValueError(f"Switch rate theta must be positive, got {theta}")
    options, probs = mix.normalized()
    if not options:
        return ServiceOption()
    if len(options) == 1:
        return options[0]
    idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    return options[min(idx, len(options) - 1)]


def nmsr_admit(
    state: SystemState,
    in_service: Iterable[int],
    option: ServiceOption,
    grid: Grid,
) -> List[int]:
    """
    Waiting jobs to start under the active option.

    A type-i job (oldest first) starts while fewer than M^(i) type-i jobs
    are in service and the rounded-up requirements of everything in
    service still fit the grid capacity.
    """
    active = set(in_service)
    used = [0] * grid.d
    per_type: Dict[TypeIndex, int] = {}
    for i in active:
        t = state.jobs[i].job_type
        per_type[t] = per_type.get(t, 0) + 1
        for l, x in enumerate(t):
            used[l] += x

    started: List[int] = []
    for t, count in option.counts:
        slots = count - per_type.get(t, 0)
        if slots <= 0:
            continue
        for job_id in state.jobs_of_type(t):
            if slots == 0:
                break
            if job_id in active:
                continue
            if any(u + x > k for u, x, k in zip(used, t, grid.K)):
                break
            started.append(job_id)
            for l, x in enumerate(t):
                used[l] += x
            slots -= 1
    return started


# =============================================================================
# Policy classes
# =============================================================================

class Policy(ABC):
    """Maps a system state to the set of jobs in service."""

    name: str = "policy"
    preemptive: bool = True

    def __init__(self, grid: Optional[Grid] = None):
        self.grid = grid

    def reset(self, rng: np.random.Generator) -> None:
        """Prepare for a new run."""

    @property
    def switch_rate(self) -> float:
        """Rate of exogenous jumps (nonzero only for modulated policies)."""
        return 0.0

    def on_switch(self, rng: np.random.Generator) -> None:
        """Handle an exogenous jump."""

    @abstractmethod
    def schedule(self, state: SystemState) -> Schedule:
        """Compute the schedule for the current state."""

    def __repr__(self) -> str:
        grid = f", K={self.grid.label()}" if self.grid else ""
        return f"{type(self).__name__}({self.name}{grid})"


class MaxWeightPolicy(Policy):
    """Discretized MaxWeight over a candidate set, optionally backfilled."""

    def __init__(
        self,
        candidates: CandidateSet,
        backfilling: bool = False,
        backfill_order: str = "arrival",
        name: str = "k-mw",
    ):
        if len(candidates) == 0:
            raise ConfigError("candidates", "MaxWeight needs a nonempty candidate set")
        super().__init__(candidates.grid)
        self.candidates = candidates
        self.backfilling = backfilling
        self.backfill_order = backfill_order
        self.name = name

    def schedule(self, state: SystemState) -> Schedule:
        option = maxweight_select(state.q, self.candidates)
        base = realize_option(state, option)
        if self.backfilling:
            return backfill(state, base, self.backfill_order)
        return base


class NMSRPolicy(Policy):
    """Nonpreemptive policy whose active option follows a modulating chain."""

    preemptive = False

    def __init__(
        self,
        mix: ServiceMix,
        theta: float = DEFAULT_THETA,
        backfilling: bool = False,
        backfill_order: str = "arrival",
        name: str = "k-nmsr",
    ):
        if not theta > 0:
            raise ConfigError("THETA", f"switch rate must be positive, got {theta}")
        if not mix.support:
            raise ConfigError("mix", "nMSR needs a mix with positive mass")
        super().__init__(mix.grid)
        self.mix = mix
        self.theta = theta
        self.backfilling = backfilling
        self.backfill_order = backfill_order
        self.name = name
        self.current: ServiceOption = mix.support[0]

    def reset(self, rng: np.random.Generator) -> None:
        self.current = nmsr_step(None, rng, self.mix, self.theta)

    @property
    def switch_rate(self) -> float:
        return self.theta

    def on_switch(self, rng: np.random.Generator) -> None:
        self.current = nmsr_step(self.current, rng, self.mix, self.theta)

    def schedule(self, state: SystemState) -> Schedule:
        kept = [i for i in state.jobs if i in state.in_service]
        served = kept + nmsr_admit(state, kept, self.current, self.grid)
        base = Schedule(served=served, option=self.current)
        if self.backfilling:
            return backfill(state, base, self.backfill_order)
        return base


class IndexPolicy(Policy):
    """FCFS, First-Fit, Best-Fit or LSF packing on true requirements."""

    def __init__(self, kind: IndexKind):
        super().__init__(None)
        self.kind = kind
        self.name = kind.value

    def schedule(self, state: SystemState) -> Schedule:
        return index_select(self.kind, state)


class PseudoMWPolicy(Policy):
    """Single-resource packing by requirement over current group size."""

    name = "pseudo-mw"

    def schedule(self, state: SystemState) -> Schedule:
        return pseudo_mw_select(state)


# =============================================================================
# Policy factory
# =============================================================================

_MW_SETS = {"k-mw": "full", "2j-emw": "2j", "2b-emw": "2b", "xp-emw": "xp"}
_NMSR_SETS = {"k-nmsr": "full", "2j-enmsr": "2j", "2b-enmsr": "2b", "xp-enmsr": "xp"}
_CONSTRUCTIONS = {"2j": NMSRMethod.CONSTRUCTION_2J, "2b": NMSRMethod.CONSTRUCTION_2B}

POLICY_NAMES = (
    tuple(_MW_SETS)
    + tuple(f"{n}-b" for n in _MW_SETS)
    + tuple(_NMSR_SETS)
    + tuple(f"{n}-b" for n in _NMSR_SETS)
    + tuple(k.value for k in IndexKind)
    + ("pseudo-mw",)
)


def split_backfill(name: str) -> Tuple[str, bool]:
    """'2j-emw-b' -> ('2j-emw', True)."""
    key = name.strip().lower()
    if key.endswith("-b") and key[:-2] in {**_MW_SETS, **_NMSR_SETS}:
        return key[:-2], True
    return key, False


def is_discretized(name: str) -> bool:
    base, _ = split_backfill(name)
    return base in _MW_SETS or base in _NMSR_SETS


def make_policy(
    name: str,
    grid: Optional[Grid] = None,
    spec: Optional[ArrivalSpec] = None,
    theta: float = DEFAULT_THETA,
    epsilon: float = 1e-3,
    backfill_order: str = "arrival",
    use_lp: bool = False,
) -> Policy:
    """
    Build a policy from its config name.

    Args:
        name: e.g. 'k-mw', '2j-emw-b', '2b-enmsr', 'lsf', 'pseudo-mw'
        grid: Discretization for the MaxWeight and nMSR families
        spec: Arrival spec; nMSR needs it to precompute its mix
        theta: nMSR switch rate
        epsilon: Margin for the explicit constructions
        backfill_order: Scan order of the backfilling pass
        use_lp: Precompute nMSR mixes with the LP even where a construction exists

    Raises:
        ConfigError: If the name is unknown or the arguments do not suit it
    """
    base, backfilling = split_backfill(name)
    if backfill_order not in BACKFILL_ORDERS:
        raise ConfigError("BACKFILL_ORDER", f"unknown order '{backfill_order}', expected one of {BACKFILL_ORDERS}")

    if base in _MW_SETS or base in _NMSR_SETS:
        if grid is None:
            raise ConfigError("K", f"policy '{name}' needs a discretization level")
        set_name = _MW_SETS.get(base) or _NMSR_SETS[base]
        candidates = build_candidates(grid, set_name)
        if base in _MW_SETS:
            return MaxWeightPolicy(candidates, backfilling, backfill_order, name=name)

        if spec is None:
            raise ConfigError("DISTRIBUTION", f"policy '{name}' needs an arrival spec to precompute its mix")
        rates = RateVector.from_spec(spec, grid)
        method = NMSRMethod.LP if use_lp else _CONSTRUCTIONS.get(set_name, NMSRMethod.LP)
        try:
            mix = nmsr_precompute(rates, candidates, method, epsilon)
        except (ConstructionInfeasibleError, MassOverflowError) as e:
            logger.warning(f"{method.value} construction failed for '{name}' ({e}); falling back to the LP")
            mix = nmsr_precompute(rates, candidates, NMSRMethod.LP, epsilon)
        return NMSRPolicy(mix, theta, backfilling, backfill_order, name=name)

    if base == "pseudo-mw":
        if spec is not None and spec.dist.d != 1:
            raise ConfigError("POLICIES", "pseudo-mw is defined for a single resource only")
        return PseudoMWPolicy()

    for kind in IndexKind:
        if base == kind.value:
            return IndexPolicy(kind)

    raise ConfigError("POLICIES", f"unknown policy '{name}', expected one of {POLICY_NAMES}")

"""
MRJ Data Models

Defines the core data structures shared by the simulator and the dominance
lab: jobs, discretization grids, service options, candidate sets, schedules
and simulation results.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import product
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union
import math

import numpy as np

from .errors import DimensionMismatchError, InvalidJobTypeError

TypeIndex = Tuple[int, ...]
Requirement = Tuple[float, ...]


def as_requirement(v: Union[float, Sequence[float]]) -> Requirement:
    """Coerce a scalar or sequence into a requirement tuple."""
    if isinstance(v, (int, float, np.floating, np.integer)):
        return (float(v),)
    return tuple(float(x) for x in v)


def as_type_index(i: Union[int, Sequence[int]]) -> TypeIndex:
    """Coerce an int (d=1) or sequence of ints into a job type tuple."""
    if isinstance(i, (int, np.integer)):
        return (int(i),)
    return tuple(int(x) for x in i)


def bucket_index(x: float, k: int) -> int:
    """
    Bucket of x under k equal left-open right-closed buckets of (0, 1].

    Computes ceil(k*x), corrected so that x == j/k (as floats) maps to j.
    """
    j = math.ceil(k * x)
    if j > 1 and (j - 1) / k >= x:
        j -= 1
    elif j < k and j / k < x:
        j += 1
    return j


@dataclass
class Job:
    """
    A single arrival.

    Attributes:
        id: Unique, increasing job identifier (arrival order)
        requirement: Per-resource requirement vector in (0,1]^d
        arrival_time: Arrival epoch
        job_type: Discretized type under the active grid (None for index policies)
    """

    id: int
    requirement: Requirement
    arrival_time: float
    job_type: Optional[TypeIndex] = None

    @property
    def size(self) -> float:
        """Largest coordinate of the requirement."""
        return max(self.requirement)

    def to_dict(self) -> Dict[str, Any]:
        """Convert job to dictionary."""
        return {
            "id": self.id,
            "requirement": list(self.requirement),
            "arrival_time": self.arrival_time,
            "job_type": list(self.job_type) if self.job_type is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Job":
        """Create Job from dictionary."""
        job_type = data.get("job_type")
        return cls(
            id=int(data["id"]),
            requirement=as_requirement(data["requirement"]),
            arrival_time=float(data.get("arrival_time", 0.0)),
            job_type=as_type_index(job_type) if job_type is not None else None,
        )


@dataclass(frozen=True)
class Grid:
    """
    A K-discretization of the unit resource cube.

    Resource l is split into K_l equal, left-open right-closed buckets; a
    job type is the tuple of bucket indices, each in 1..K_l.
    """

    K: TypeIndex

    def __post_init__(self):
        K = as_type_index(self.K)
        if not K:
            raise ValueError("Grid needs at least one resource")
        if any(k < 1 for k in K):
            raise ValueError(f"Every K_l must be >= 1, got {K}")
        object.__setattr__(self, "K", K)

    @classmethod
    def of(cls, K: Union[int, Sequence[int]]) -> "Grid":
        return cls(as_type_index(K))

    @property
    def d(self) -> int:
        return len(self.K)

    @property
    def num_types(self) -> int:
        return math.prod(self.K)

    def types(self) -> Iterator[TypeIndex]:
        """All job types in row-major (flat index) order."""
        return product(*(range(1, k + 1) for k in self.K))

    def flat_index(self, t: TypeIndex) -> int:
        """Row-major 0-based index of a job type."""
        if len(t) != self.d:
            raise DimensionMismatchError(f"Type {t} has dimension {len(t)}, grid has {self.d}")
        idx = 0
        for k, i in zip(self.K, t):
            if not 1 <= i <= k:
                raise InvalidJobTypeError(f"Type {t} outside grid K={self.K}")
            idx = idx * k + (i - 1)
        return idx

    def type_at(self, idx: int) -> TypeIndex:
        """Inverse of flat_index."""
        if not 0 <= idx < self.num_types:
            raise InvalidJobTypeError(f"Flat index {idx} outside grid K={self.K}")
        t = []
        for k in reversed(self.K):
            idx, r = divmod(idx, k)
            t.append(r + 1)
        return tuple(reversed(t))

    def complement(self, t: TypeIndex) -> TypeIndex:
        """The type K - t, coordinate-wise."""
        return tuple(k - i for k, i in zip(self.K, t))

    def is_boundary(self, t: TypeIndex) -> bool:
        """True when the type uses the full capacity of at least one resource."""
        return any(i == k for k, i in zip(self.K, t))

    def label(self) -> str:
        return "x".join(str(k) for k in self.K)

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Parse '8' or '3x3' into a grid."""
        parts = [p for p in str(text).lower().replace(",", "x").split("x") if p.strip()]
        return cls(tuple(int(p) for p in parts))


@dataclass(frozen=True)
class ServiceOption:
    """
    A sparse count vector over job types: how many jobs of each type a
    schedule attempts to serve together. Absent types have count zero.
    """

    counts: Tuple[Tuple[TypeIndex, int], ...] = ()

    def __post_init__(self):
        merged: Dict[TypeIndex, int] = {}
        for t, c in self.counts:
            merged[as_type_index(t)] = merged.get(as_type_index(t), 0) + int(c)
        if any(c < 0 for c in merged.values()):
            raise ValueError(f"Negative count in service option {merged}")
        canonical = tuple(sorted((t, c) for t, c in merged.items() if c > 0))
        object.__setattr__(self, "counts", canonical)

    @classmethod
    def of(cls, mapping: Optional[Mapping[Union[int, Sequence[int]], int]] = None) -> "ServiceOption":
        """Build from a mapping; int keys are d=1 types."""
        mapping = mapping or {}
        return cls(tuple((as_type_index(t), c) for t, c in mapping.items()))

    @classmethod
    def from_jobs(cls, types: Iterable[Union[int, Sequence[int]]]) -> "ServiceOption":
        """Build from a multiset of job types, e.g. [1, 4] or [(2, 1), (1, 2)]."""
        mapping: Dict[TypeIndex, int] = {}
        for t in types:
            key = as_type_index(t)
            mapping[key] = mapping.get(key, 0) + 1
        return cls(tuple(mapping.items()))

    def get(self, t: Union[int, TypeIndex]) -> int:
        key = as_type_index(t)
        for typ, c in self.counts:
            if typ == key:
                return c
        return 0

    @property
    def total(self) -> int:
        """Total number of jobs the option serves."""
        return sum(c for _, c in self.counts)

    @property
    def is_zero(self) -> bool:
        return not self.counts

    def usage(self, d: int) -> Tuple[int, ...]:
        """Per-resource sum of type indices times counts (in bucket units)."""
        sums = [0] * d
        for t, c in self.counts:
            for l in range(d):
                sums[l] += t[l] * c
        return tuple(sums)

    def dense(self, grid: Grid) -> np.ndarray:
        """Dense count vector in the grid's flat type order."""
        vec = np.zeros(grid.num_types, dtype=np.int64)
        for t, c in self.counts:
            vec[grid.flat_index(t)] = c
        return vec

    def __add__(self, other: "ServiceOption") -> "ServiceOption":
        return ServiceOption(self.counts + other.counts)

    def to_text(self) -> str:
        """Sorted 'type:count' pairs separated by spaces; '{}' for the zero option."""
        if not self.counts:
            return "{}"
        return " ".join(f"{','.join(str(x) for x in t)}:{c}" for t, c in self.counts)

    @classmethod
    def from_text(cls, text: str) -> "ServiceOption":
        text = text.strip()
        if text in ("", "{}"):
            return cls()
        pairs = []
        for token in text.split():
            typ, _, count = token.rpartition(":")
            pairs.append((tuple(int(x) for x in typ.split(",")), int(count)))
        return cls(tuple(pairs))

    def __repr__(self) -> str:
        return f"ServiceOption({self.to_text()})"


class Provenance(Enum):
    """How a candidate set was built."""
    FULL = "full"
    TWO_JOB = "2j"
    TWO_BUCKET = "2b"
    PAIRWISE_EXTREME = "xp"
    EXACT = "exact"
    EXPLICIT = "explicit"


@dataclass
class CandidateSet:
    """
    An immutable list of feasible service options for one grid.

    Attributes:
        grid: The discretization the options refer to
        options: Distinct, feasible options in lexicographic dense order
        provenance: Which construction produced the set
    """

    grid: Grid
    options: Tuple[ServiceOption, ...]
    provenance: Provenance = Provenance.EXPLICIT

    def __post_init__(self):
        self.options = tuple(self.options)
        if len(set(self.options)) != len(self.options):
            raise ValueError("Candidate set contains duplicate options")
        for option in self.options:
            if not option_fits(option, self.grid):
                raise ValueError(f"Infeasible option {option.to_text()} for K={self.grid.K}")

    def __len__(self) -> int:
        return len(self.options)

    def __iter__(self) -> Iterator[ServiceOption]:
        return iter(self.options)

    def __contains__(self, option: ServiceOption) -> bool:
        return option in self._index

    @cached_property
    def _index(self) -> Dict[ServiceOption, int]:
        return {opt: i for i, opt in enumerate(self.options)}

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense (n_options, n_types) count matrix."""
        mat = np.zeros((len(self.options), self.grid.num_types), dtype=np.int64)
        for row, option in enumerate(self.options):
            for t, c in option.counts:
                mat[row, self.grid.flat_index(t)] = c
        return mat

    @cached_property
    def ranked(self) -> np.ndarray:
        """Row order by larger total first, then lexicographically smaller dense vector."""
        keys = [(-opt.total, tuple(row)) for opt, row in zip(self.options, self.matrix.tolist())]
        return np.array(sorted(range(len(keys)), key=keys.__getitem__), dtype=np.int64)

    @cached_property
    def ranked_matrix(self) -> np.ndarray:
        """matrix rows in ranked order."""
        return self.matrix[self.ranked]

    def to_text(self) -> str:
        """One option per line."""
        return "\n".join(opt.to_text() for opt in self.options) + "\n"

    @classmethod
    def from_text(cls, grid: Grid, text: str, provenance: Provenance = Provenance.EXPLICIT) -> "CandidateSet":
        options = [ServiceOption.from_text(line) for line in text.splitlines() if line.strip()]
        return cls(grid, tuple(options), provenance)

    def __repr__(self) -> str:
        return f"CandidateSet(K={self.grid.K}, provenance='{self.provenance.value}', size={len(self.options)})"


def option_fits(option: ServiceOption, grid: Grid) -> bool:
    """Per-resource sum of type indices times counts is at most K_l."""
    for t, _ in option.counts:
        if len(t) != grid.d or any(not 1 <= i <= k for i, k in zip(t, grid.K)):
            return False
    return all(u <= k for u, k in zip(option.usage(grid.d), grid.K))


@dataclass
class Schedule:
    """
    The set of jobs served simultaneously until the next state change.

    Attributes:
        served: Job ids in service
        option: The service option that generated it (None for index policies)
    """

    served: List[int] = field(default_factory=list)
    option: Optional[ServiceOption] = None

    def __len__(self) -> int:
        return len(self.served)


@dataclass
class SimResult:
    """
    Metrics of one simulation run.

    Attributes:
        mean_response_time: Mean sojourn time over completed jobs (nan if none)
        completed: Number of completed jobs counted in the mean
        max_queue_len: Largest number of jobs ever in system
        unstable: True when an instability cutoff fired
        wall_clock: Seconds spent in the run
        seed: Seed of the run's random stream
        arrivals: Number of arrivals processed
        in_system: Jobs still in system at the end
        events: Number of processed events
        mean_jobs_in_system: Time-average number of jobs in system
        sim_time: Simulated time at the end of the run
        reason: Which cutoff fired, if any
    """

    mean_response_time: float
    completed: int
    max_queue_len: int
    unstable: bool
    wall_clock: float = 0.0
    seed: int = 0
    arrivals: int = 0
    in_system: int = 0
    events: int = 0
    mean_jobs_in_system: float = 0.0
    sim_time: float = 0.0
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        """Convert result to dictionary."""
        return {
            "mean_response_time": self.mean_response_time,
            "completed": self.completed,
            "max_queue_len": self.max_queue_len,
            "unstable": self.unstable,
            "wall_clock": self.wall_clock,
            "seed": self.seed,
            "arrivals": self.arrivals,
            "in_system": self.in_system,
            "events": self.events,
            "mean_jobs_in_system": self.mean_jobs_in_system,
            "sim_time": self.sim_time,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimResult":
        """Create SimResult from dictionary."""
        return cls(
            mean_response_time=float(data["mean_response_time"]),
            completed=int(data.get("completed", 0)),
            max_queue_len=int(data.get("max_queue_len", 0)),
            unstable=bool(data.get("unstable", False)),
            wall_clock=float(data.get("wall_clock", 0.0)),
            seed=int(data.get("seed", 0)),
            arrivals=int(data.get("arrivals", 0)),
            in_system=int(data.get("in_system", 0)),
            events=int(data.get("events", 0)),
            mean_jobs_in_system=float(data.get("mean_jobs_in_system", 0.0)),
            sim_time=float(data.get("sim_time", 0.0)),
            reason=data.get("reason", ""),
        )

    def __repr__(self) -> str:
        flag = " UNSTABLE" if self.unstable else ""
        return (
            f"SimResult(mrt={self.mean_response_time:.4f}, completed={self.completed}, "
            f"max_queue={self.max_queue_len}{flag})"
        )


def validate_sim_result(result: SimResult, max_queue: int, max_mrt: float) -> tuple[bool, Optional[str]]:
    """
    Check the result invariants.

    Args:
        result: Result to validate
        max_queue: Queue-length cutoff used by the run
        max_mrt: Mean-response-time cutoff used by the run

    Returns:
        Tuple of (is_valid, error_message)
    """
    if result.unstable and not (
        result.max_queue_len > max_queue
        or result.mean_response_time > max_mrt
        or result.reason == "stalled"
    ):
        return False, "Unstable flag set without a cutoff being exceeded"

    if result.arrivals != result.completed + result.in_system:
        return False, "Job conservation violated"

    return True, None

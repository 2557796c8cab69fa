"""
Discretization and Candidate Sets

This module maps continuous requirements to job types and builds the
candidate service-option sets used by discretized MaxWeight and nMSR:
the full admissible set C_K and the 2-Job, 2-Bucket and Pairwise-Extreme
efficient sets.
"""

from typing import Dict, Iterator, List, Sequence, Tuple, Union
import logging

from .errors import ConfigError, DimensionMismatchError, EnumerationTooLargeError, InvalidJobTypeError
from .models import (
    CandidateSet,
    Grid,
    Provenance,
    ServiceOption,
    TypeIndex,
    as_requirement,
    bucket_index,
    option_fits,
)

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 10_000_000


def job_type(v: Union[float, Sequence[float]], grid: Grid) -> TypeIndex:
    """
    Discretize a requirement vector: i_l = ceil(K_l * v_l).

    Buckets are left-open and right-closed, so v_l = k/K_l maps to k.

    Args:
        v: Requirement vector in (0,1]^d
        grid: Discretization grid

    Returns:
        Job type tuple

    Raises:
        InvalidJobTypeError: If some coordinate is <= 0 or > 1
    """
    vec = as_requirement(v)
    if len(vec) != grid.d:
        raise DimensionMismatchError(f"Requirement {vec} has dimension {len(vec)}, grid has {grid.d}")
    for x in vec:
        if not 0.0 < x <= 1.0:
            raise InvalidJobTypeError(f"Requirement coordinate {x} outside (0, 1]")
    return tuple(bucket_index(x, k) for x, k in zip(vec, grid.K))


def is_feasible(option: ServiceOption, grid: Grid) -> bool:
    """True iff sum_i i_l * M^(i) <= K_l for every resource l."""
    return option_fits(option, grid)


def _sorted_set(grid: Grid, options: Sequence[ServiceOption], provenance: Provenance) -> CandidateSet:
    unique = set(options)
    ordered = sorted(unique, key=lambda o: tuple(o.dense(grid)))
    return CandidateSet(grid, tuple(ordered), provenance)


def enumerate_candidates(grid: Grid, cap: int = DEFAULT_ENUMERATION_CAP) -> CandidateSet:
    """
    Enumerate C_K, every feasible service option including the zero option.

    Options come out in lexicographic order of their dense count vectors.

    Raises:
        EnumerationTooLargeError: If more than cap options exist
    """
    types = list(grid.types())
    n = len(types)
    counts = [0] * n
    vectors: List[Tuple[int, ...]] = []

    def rec(pos: int, remaining: Tuple[int, ...]) -> None:
        if pos == n:
            vectors.append(tuple(counts))
            if len(vectors) > cap:
                raise EnumerationTooLargeError(cap)
            return
        t = types[pos]
        most = min(r // i for r, i in zip(remaining, t))
        for c in range(most + 1):
            counts[pos] = c
            rec(pos + 1, tuple(r - c * i for r, i in zip(remaining, t)))
        counts[pos] = 0

    rec(0, grid.K)
    options = tuple(
        ServiceOption(tuple((types[i], c) for i, c in enumerate(vec) if c)) for vec in vectors
    )
    logger.info(f"Enumerated {len(options)} service options for K={grid.K}")
    return CandidateSet(grid, options, Provenance.FULL)


def boundary_set(grid: Grid) -> List[TypeIndex]:
    """Job types that use the full capacity of at least one resource."""
    return [t for t in grid.types() if grid.is_boundary(t)]


def efficient_set_2J(grid: Grid) -> CandidateSet:
    """
    The 2-Job efficient set: boundary singletons plus complementary pairs.

    Each boundary type is served alone; every other type j is paired with
    K - j, listed once from the lexicographically larger side. A type equal
    to its own complement (every K_l even, j = K/2) is served twice.
    """
    options: List[ServiceOption] = [ServiceOption.from_jobs([t]) for t in boundary_set(grid)]

    for t in grid.types():
        if grid.is_boundary(t):
            continue
        partner = grid.complement(t)
        if t > partner:
            options.append(ServiceOption.from_jobs([t, partner]))
        elif t == partner:
            options.append(ServiceOption.of({t: 2}))

    result = _sorted_set(grid, options, Provenance.TWO_JOB)
    logger.info(f"Built 2J efficient set of size {len(result)} for K={grid.K}")
    return result


def _check_power_of_two(grid: Grid) -> int:
    if grid.d != 1:
        raise ConfigError("K", "the 2-Bucket set is defined for a single resource only")
    K = grid.K[0]
    if K & (K - 1):
        raise ConfigError("K", f"K must be a power of two, got {K}")
    return K.bit_length() - 1


def two_bucket_options(grid: Grid) -> Dict[int, ServiceOption]:
    """
    The 2-Bucket options M_k, keyed by k = 1..K (K = 2^L).

    For k = 2^l the option serves 2^(L-l) type-k jobs; otherwise, with
    l = ceil(log2 k), it serves 2^(L-l) jobs of type k and 2^(L-l) of type
    2^l - k. Every option fills the capacity exactly.
    """
    L = _check_power_of_two(grid)
    K = grid.K[0]
    options: Dict[int, ServiceOption] = {}
    for k in range(1, K + 1):
        level = (k - 1).bit_length()
        copies = 2 ** (L - level)
        if k == 2 ** level:
            options[k] = ServiceOption.of({k: copies})
        else:
            options[k] = ServiceOption.of({k: copies, 2 ** level - k: copies})
    return options


def efficient_set_2B(grid: Grid) -> CandidateSet:
    """The 2-Bucket efficient set for K = 2^L, d = 1 (exactly K options)."""
    options = list(two_bucket_options(grid).values())
    result = _sorted_set(grid, options, Provenance.TWO_BUCKET)
    logger.info(f"Built 2B efficient set of size {len(result)} for K={grid.K}")
    return result


def partitions(n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[Tuple[int, ...]]:
    """
    Integer partitions of n as nonincreasing tuples.

    Raises:
        EnumerationTooLargeError: If more than cap partitions are produced
    """
    produced = 0

    def rec(remaining: int, largest: int, prefix: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        if remaining == 0:
            yield prefix
            return
        for part in range(min(remaining, largest), 0, -1):
            yield from rec(remaining - part, part, prefix + (part,))

    for p in rec(n, n, ()):
        produced += 1
        if produced > cap:
            raise EnumerationTooLargeError(cap, what=f"partitions of {n}")
        yield p


def exact_capacity_set(grid: Grid, cap: int = DEFAULT_ENUMERATION_CAP) -> CandidateSet:
    """Options whose type indices sum to exactly K (d = 1)."""
    if grid.d != 1:
        raise ConfigError("K", "the exact-capacity set is defined for a single resource only")
    options = [ServiceOption.from_jobs(p) for p in partitions(grid.K[0], cap)]
    return _sorted_set(grid, options, Provenance.EXACT)


def efficient_set_XP(grid: Grid, cap: int = DEFAULT_ENUMERATION_CAP) -> CandidateSet:
    """
    The Pairwise-Extreme efficient set for even K, d = 1.

    Keeps every option that fills capacity exactly, except those that are
    the sum of two distinct options filling capacity K/2 exactly.

    Raises:
        ConfigError: If K is odd or d != 1
        EnumerationTooLargeError: If a partition count exceeds cap
    """
    if grid.d != 1:
        raise ConfigError("K", "the Pairwise-Extreme set is defined for a single resource only")
    K = grid.K[0]
    if K % 2:
        raise ConfigError("K", f"K must be even for the Pairwise-Extreme set, got {K}")

    halves = list(partitions(K // 2, cap))
    decomposable = set()
    for a in range(len(halves)):
        for b in range(a + 1, len(halves)):
            decomposable.add(tuple(sorted(halves[a] + halves[b], reverse=True)))

    options = [ServiceOption.from_jobs(p) for p in partitions(K, cap) if p not in decomposable]
    result = _sorted_set(grid, options, Provenance.PAIRWISE_EXTREME)
    logger.info(f"Built XP efficient set of size {len(result)} for K={K}")
    return result


def build_candidates(grid: Grid, name: str, cap: int = DEFAULT_ENUMERATION_CAP) -> CandidateSet:
    """
    Build a candidate set by name: full, 2j, 2b, xp or exact.

    Raises:
        ConfigError: If the name is unknown or the grid does not suit the set
    """
    key = name.lower()
    if key in ("full", "k"):
        return enumerate_candidates(grid, cap)
    if key == "2j":
        return efficient_set_2J(grid)
    if key == "2b":
        return efficient_set_2B(grid)
    if key == "xp":
        return efficient_set_XP(grid, cap)
    if key == "exact":
        return exact_capacity_set(grid, cap)
    raise ConfigError("set", f"unknown candidate set '{name}'")

"""
Tests for Discretization and Candidate Sets

Tests cover:
- Job types of requirement vectors
- Enumeration of the full admissible set against a counting oracle
- The 2-Job, 2-Bucket, Pairwise-Extreme and exact-capacity sets
- Feasibility of every constructed option
"""

import pytest

from src.mrj.discretization import (
    boundary_set,
    build_candidates,
    efficient_set_2B,
    efficient_set_2J,
    efficient_set_XP,
    enumerate_candidates,
    exact_capacity_set,
    is_feasible,
    job_type,
    partitions,
    two_bucket_options,
)
from src.mrj.errors import ConfigError, DimensionMismatchError, EnumerationTooLargeError, InvalidJobTypeError
from src.mrj.models import Grid, Provenance, ServiceOption


def count_bounded_multisets(K: int) -> int:
    """Number of multisets of parts from 1..K with sum <= K."""
    ways = [1] + [0] * K
    for part in range(1, K + 1):
        for total in range(part, K + 1):
            ways[total] += ways[total - part]
    return sum(ways)


def options_of(*jobs_lists):
    return {ServiceOption.from_jobs(jobs) for jobs in jobs_lists}


# =============================================================================
# Tests: job_type
# =============================================================================

class TestJobType:
    """Tests for discretizing requirements."""

    def test_single_resource(self):
        assert job_type(0.3, Grid.of(10)) == (3,)
        assert job_type(1.0, Grid.of(5)) == (5,)
        assert job_type(0.01, Grid.of(5)) == (1,)

    def test_multi_resource(self):
        assert job_type((0.5, 1.0), Grid.of((2, 4))) == (1, 4)
        assert job_type((1.0, 0.5), Grid.of((8, 2))) == (8, 1)
        assert job_type(0.2601, Grid.of(4)) == (2,)

    @pytest.mark.parametrize("v", [0.0, -0.2, 1.2])
    def test_outside_unit_interval(self, v):
        with pytest.raises(InvalidJobTypeError):
            job_type(v, Grid.of(4))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            job_type((0.2, 0.3), Grid.of(4))


# =============================================================================
# Tests: Full admissible set
# =============================================================================

class TestEnumerateCandidates:
    """Tests for C_K."""

    def test_small_sizes(self):
        assert len(enumerate_candidates(Grid.of(2))) == 4
        assert len(enumerate_candidates(Grid.of(3))) == 7

    @pytest.mark.parametrize("K", range(1, 21))
    def test_size_matches_counting_oracle(self, K):
        assert len(enumerate_candidates(Grid.of(K))) == count_bounded_multisets(K)

    def test_contents_for_K3(self):
        cs = enumerate_candidates(Grid.of(3))
        expected = options_of([], [1], [2], [3], [1, 1], [1, 2], [1, 1, 1])
        assert set(cs.options) == expected
        assert cs.options[0].is_zero
        assert cs.provenance is Provenance.FULL

    def test_lexicographic_order(self):
        grid = Grid.of(5)
        dense = [tuple(o.dense(grid)) for o in enumerate_candidates(grid)]
        assert dense == sorted(dense)

    def test_two_resources(self):
        cs = enumerate_candidates(Grid.of((2, 2)))
        assert len(cs) == 6
        assert len(enumerate_candidates(Grid.of((1, 1)))) == 2
        assert ServiceOption.of({(1, 1): 2}) in cs
        assert ServiceOption.from_jobs([(1, 1), (1, 2)]) not in cs

    def test_cap(self):
        with pytest.raises(EnumerationTooLargeError):
            enumerate_candidates(Grid.of(20), cap=100)


# =============================================================================
# Tests: Efficient sets
# =============================================================================

class TestEfficientSet2J:
    """Tests for the 2-Job set."""

    def test_odd_K(self):
        cs = efficient_set_2J(Grid.of(5))
        assert set(cs.options) == options_of([5], [1, 4], [2, 3])
        assert cs.provenance is Provenance.TWO_JOB

    def test_even_K_adds_half_pair(self):
        cs = efficient_set_2J(Grid.of(4))
        assert set(cs.options) == options_of([4], [1, 3], [2, 2])

    def test_two_resources(self):
        grid = Grid.of((3, 3))
        cs = efficient_set_2J(grid)
        assert len(cs) == 7
        assert ServiceOption.from_jobs([(2, 1), (1, 2)]) in cs
        assert ServiceOption.from_jobs([(2, 2), (1, 1)]) in cs

    def test_every_type_is_served(self):
        for K in (5, 8, 9, 64):
            grid = Grid.of(K)
            served = {t for o in efficient_set_2J(grid) for t, _ in o.counts}
            assert served == set(grid.types())

    @pytest.mark.parametrize("K", [(4, 4), (3, 3), (4, 3), (2, 6), (4, 4, 2)])
    def test_every_type_is_served_on_multi_resource_grids(self, K):
        grid = Grid.of(K)
        served = {t for o in efficient_set_2J(grid) for t, _ in o.counts}
        assert served == set(grid.types())

    def test_even_middle_slice_pairs_with_complement(self):
        cs = efficient_set_2J(Grid.of((4, 4)))
        assert ServiceOption.from_jobs([(2, 3), (2, 1)]) in cs
        assert ServiceOption.of({(2, 2): 2}) in cs
        assert all(is_feasible(o, cs.grid) for o in cs)

    def test_boundary_set(self):
        assert boundary_set(Grid.of(4)) == [(4,)]
        assert len(boundary_set(Grid.of((3, 3)))) == 5


class TestEfficientSet2B:
    """Tests for the 2-Bucket set."""

    def test_options_for_K4(self):
        options = two_bucket_options(Grid.of(4))
        assert options[1] == ServiceOption.of({1: 4})
        assert options[2] == ServiceOption.of({2: 2})
        assert options[3] == ServiceOption.of({3: 1, 1: 1})
        assert options[4] == ServiceOption.of({4: 1})

    @pytest.mark.parametrize("K", [1, 2, 4, 8, 16, 32, 64])
    def test_full_utilization(self, K):
        cs = efficient_set_2B(Grid.of(K))
        assert len(cs) == K
        assert all(o.usage(1) == (K,) for o in cs)

    def test_requires_power_of_two(self):
        with pytest.raises(ConfigError, match="power of two"):
            efficient_set_2B(Grid.of(6))

    def test_requires_single_resource(self):
        with pytest.raises(ConfigError):
            efficient_set_2B(Grid.of((4, 4)))


class TestEfficientSetXP:
    """Tests for the Pairwise-Extreme set."""

    def test_K4(self):
        cs = efficient_set_XP(Grid.of(4))
        assert set(cs.options) == options_of([4], [3, 1], [2, 2], [1, 1, 1, 1])

    def test_K2(self):
        assert set(efficient_set_XP(Grid.of(2)).options) == options_of([2], [1, 1])

    def test_subset_of_exact_capacity(self):
        grid = Grid.of(8)
        assert set(efficient_set_XP(grid).options) <= set(exact_capacity_set(grid).options)

    def test_odd_K_rejected(self):
        with pytest.raises(ConfigError):
            efficient_set_XP(Grid.of(5))


class TestExactCapacitySet:
    """Tests for options filling capacity exactly."""

    def test_partition_counts(self):
        assert len(list(partitions(5))) == 7
        assert len(exact_capacity_set(Grid.of(30))) == 5604

    def test_partitions_are_nonincreasing(self):
        for p in partitions(6):
            assert list(p) == sorted(p, reverse=True)
            assert sum(p) == 6

    def test_partition_cap(self):
        with pytest.raises(EnumerationTooLargeError):
            list(partitions(30, cap=10))


# =============================================================================
# Tests: Feasibility and lookup
# =============================================================================

class TestFeasibility:
    """Every constructed option must fit the grid."""

    @pytest.mark.parametrize("name,K", [
        ("full", "6"), ("2j", "7"), ("2j", "3x3"), ("2b", "16"), ("xp", "8"), ("exact", "10"),
    ])
    def test_all_options_feasible(self, name, K):
        grid = Grid.parse(K)
        assert all(is_feasible(o, grid) for o in build_candidates(grid, name))

    def test_infeasible_option(self):
        assert not is_feasible(ServiceOption.from_jobs([3, 3]), Grid.of(5))
        assert not is_feasible(ServiceOption.from_jobs([6]), Grid.of(5))

    def test_unknown_set(self):
        with pytest.raises(ConfigError):
            build_candidates(Grid.of(4), "best")

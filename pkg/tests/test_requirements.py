"""
Tests for Requirement Distributions and Core Models

Tests cover:
- Bucket indexing at bucket edges
- Bucket masses of every distribution family
- Seeded sampling and chi-square agreement with bucket masses
- Distribution strings
- Grid, ServiceOption and CandidateSet models
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from src.mrj.errors import DimensionMismatchError, InvalidJobTypeError
from src.mrj.models import (
    CandidateSet,
    Grid,
    Job,
    ServiceOption,
    SimResult,
    bucket_index,
    validate_sim_result,
)
from src.mrj.requirements import (
    ArrivalSpec,
    BoundedLomax,
    Empirical,
    PointMass,
    Product,
    SymmetricTriangular,
    TriangularDecreasing,
    TruncatedNormal,
    Uniform,
    parse_distribution,
)


# =============================================================================
# Tests: bucket_index
# =============================================================================

class TestBucketIndex:
    """Tests for left-open, right-closed bucketing."""

    @pytest.mark.parametrize("x,k,expected", [
        (0.5, 2, 1),
        (0.25, 4, 1),
        (1.0, 7, 7),
        (0.3, 10, 3),
        (0.7, 10, 7),
        (0.30000001, 10, 4),
        (1e-9, 64, 1),
    ])
    def test_edges(self, x, k, expected):
        assert bucket_index(x, k) == expected

    def test_every_edge_maps_to_its_bucket(self):
        for k in (3, 5, 10, 64, 100):
            for j in range(1, k + 1):
                assert bucket_index(j / k, k) == j


# =============================================================================
# Tests: Bucket masses
# =============================================================================

class TestBucketMasses:
    """Tests for per-type probabilities."""

    @pytest.mark.parametrize("dist", [
        Uniform(),
        TruncatedNormal(),
        TruncatedNormal(0.3, 0.2),
        BoundedLomax(),
        TriangularDecreasing(),
        SymmetricTriangular(0.25, 0.5),
    ])
    @pytest.mark.parametrize("K", [1, 4, 7, 32])
    def test_masses_sum_to_one(self, dist, K):
        masses = dist.bucket_masses(K)
        assert masses.shape == (K,)
        assert np.all(masses >= 0)
        assert masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_uniform_masses(self):
        assert Uniform().bucket_masses(4) == pytest.approx([0.25] * 4)

    def test_triangular_masses(self):
        assert TriangularDecreasing().bucket_masses(2) == pytest.approx([0.75, 0.25])
        assert TriangularDecreasing().bucket_masses(4) == pytest.approx([0.4375, 0.3125, 0.1875, 0.0625])

    def test_lomax_masses_match_quadrature(self):
        dist = BoundedLomax(2.0, 1.0)
        masses = dist.bucket_masses(8)
        for j in range(8):
            expected, _ = integrate.quad(dist.density, j / 8, (j + 1) / 8)
            assert masses[j] == pytest.approx(expected, abs=1e-10)

    def test_point_mass_is_one_hot(self):
        assert PointMass(1.0).bucket_masses(1).tolist() == [1.0]
        assert PointMass(0.25).bucket_masses(4).tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_empirical_counts_exactly(self):
        dist = Empirical([0.1, 0.5, 0.5, 1.0])
        assert dist.bucket_masses(2).tolist() == [0.75, 0.25]
        assert dist.bucket_masses(10).tolist() == [0.25, 0, 0, 0, 0.5, 0, 0, 0, 0, 0.25]

    def test_product_masses_are_outer_products(self):
        dist = Product([TriangularDecreasing(), Uniform()])
        masses = dist.bucket_masses((2, 2))
        assert masses == pytest.approx([0.375, 0.375, 0.125, 0.125])

    def test_product_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Product([Uniform(), Uniform()]).bucket_masses(4)

    def test_bucket_probability(self):
        assert TriangularDecreasing().bucket_probability(2, 1) == pytest.approx(0.75)
        assert Product([Uniform(), Uniform()]).bucket_probability((3, 3), (2, 3)) == pytest.approx(1 / 9)

    def test_bucket_probability_outside_grid(self):
        with pytest.raises(InvalidJobTypeError):
            Uniform().bucket_probability(4, 5)


class TestSampledFrequencies:
    """Sampled job types follow the bucket masses."""

    N_SAMPLES = 100_000
    K = 16

    @pytest.mark.parametrize("dist", [
        Uniform(),
        TruncatedNormal(),
        BoundedLomax(),
        TriangularDecreasing(),
        SymmetricTriangular(0.25, 0.75),
    ])
    def test_chi_square_against_bucket_masses(self, dist, rng):
        observed = np.zeros(self.K)
        for _ in range(self.N_SAMPLES):
            observed[bucket_index(dist.sample(rng)[0], self.K) - 1] += 1

        masses = dist.bucket_masses(self.K)
        support = masses > 0
        assert observed[~support].sum() == 0

        expected = masses[support] / masses[support].sum() * self.N_SAMPLES
        _, p_value = stats.chisquare(observed[support], expected)
        assert p_value > 1e-3


# =============================================================================
# Tests: Moments, densities and sampling
# =============================================================================

class TestDistributions:
    """Tests for densities, means and sampling."""

    def test_lomax_mean_is_one_third(self):
        assert BoundedLomax().expectation() == pytest.approx(1 / 3, abs=1e-9)

    def test_truncated_normal_symmetric_mean(self):
        assert TruncatedNormal().expectation() == pytest.approx(0.5, abs=1e-12)

    def test_pdf_zero_outside_unit_interval(self):
        assert Uniform().pdf(1.5) == 0.0
        assert TriangularDecreasing().pdf(-0.1) == 0.0

    def test_pdf_dimension_check(self):
        with pytest.raises(DimensionMismatchError):
            Uniform().pdf((0.2, 0.3))

    @pytest.mark.parametrize("dist", [
        Uniform(),
        TruncatedNormal(),
        TruncatedNormal(0.3, 0.2),
        BoundedLomax(),
        TriangularDecreasing(),
        SymmetricTriangular(0.25, 0.75),
    ])
    def test_pdf_integrates_to_one(self, dist):
        total, _ = integrate.quad(dist.pdf, 0.0, 1.0, points=[0.25, 0.5, 0.75])
        assert total == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("dist", [
        Uniform(),
        TruncatedNormal(0.5, 0.1),
        BoundedLomax(),
        TriangularDecreasing(),
        SymmetricTriangular(0.25, 0.5),
    ])
    def test_samples_in_support_and_mean(self, dist, rng):
        draws = np.array([dist.sample(rng)[0] for _ in range(20_000)])
        assert np.all((draws > 0) & (draws <= 1))
        assert draws.mean() == pytest.approx(dist.expectation(), abs=0.01)

    def test_sampling_is_seeded(self):
        a = [Uniform().sample(np.random.default_rng(7)) for _ in range(3)]
        b = [Uniform().sample(np.random.default_rng(7)) for _ in range(3)]
        assert a == b

    def test_product_sample_dimension(self, rng):
        v = Product([Uniform(), TriangularDecreasing()]).sample(rng)
        assert len(v) == 2

    def test_lipschitz_constants(self):
        assert Uniform().lipschitz_constant() == 0.0
        assert TriangularDecreasing().lipschitz_constant() == 2.0
        assert SymmetricTriangular(0.25, 0.5).lipschitz_constant() == pytest.approx(64.0)
        assert PointMass(0.5).lipschitz_constant() is None

    def test_arrival_spec_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            ArrivalSpec(0.0, Uniform())

    def test_load_upper_bound(self):
        assert ArrivalSpec(1.5, TriangularDecreasing()).load_upper_bound == pytest.approx(0.5)


# =============================================================================
# Tests: Distribution strings
# =============================================================================

class TestParseDistribution:
    """Tests for config strings."""

    @pytest.mark.parametrize("text", [
        "uniform",
        "truncated-normal:0.5,1",
        "bounded-lomax:2,1",
        "triangular",
        "symmetric-triangular:0.25,0.5",
        "point-mass:0.25",
        "product:uniform|triangular",
    ])
    def test_describe_round_trip(self, text):
        dist = parse_distribution(text)
        assert parse_distribution(dist.describe()).describe() == dist.describe()

    def test_defaults(self):
        dist = parse_distribution("truncated-normal")
        assert isinstance(dist, TruncatedNormal)
        assert dist.mu == 0.5 and dist.sigma == 1.0

    def test_product_dimension(self):
        assert parse_distribution("product:uniform|uniform|uniform").d == 3

    @pytest.mark.parametrize("text", ["gamma", "point-mass", "symmetric-triangular:0.5", "uniform:abc"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_distribution(text)


# =============================================================================
# Tests: Models
# =============================================================================

class TestGrid:
    """Tests for the discretization grid."""

    def test_types_in_flat_order(self):
        grid = Grid.of((2, 3))
        types = list(grid.types())
        assert types[0] == (1, 1) and types[1] == (1, 2) and types[-1] == (2, 3)
        assert [grid.flat_index(t) for t in types] == list(range(6))
        assert [grid.type_at(i) for i in range(6)] == types

    def test_parse_and_label(self):
        assert Grid.parse("3x3").K == (3, 3)
        assert Grid.parse("64").label() == "64"

    def test_complement_and_boundary(self):
        grid = Grid.of((5, 5))
        assert grid.complement((2, 4)) == (3, 1)
        assert grid.is_boundary((5, 1))
        assert not grid.is_boundary((4, 4))

    def test_invalid(self):
        with pytest.raises(ValueError):
            Grid.of(0)


class TestServiceOption:
    """Tests for sparse service options."""

    def test_canonical_form(self):
        assert ServiceOption.from_jobs([4, 1]) == ServiceOption.of({1: 1, 4: 1})
        assert ServiceOption.of({2: 0}).is_zero

    def test_total_and_usage(self):
        option = ServiceOption.of({1: 2, 3: 1})
        assert option.total == 3
        assert option.usage(1) == (5,)

    def test_text_format(self):
        assert ServiceOption.from_jobs([1, 4]).to_text() == "1:1 4:1"
        assert ServiceOption.from_jobs([(2, 1)]).to_text() == "2,1:1"
        assert ServiceOption().to_text() == "{}"
        assert ServiceOption.from_text("2,1:1 1,3:2") == ServiceOption.of({(2, 1): 1, (1, 3): 2})

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError):
            ServiceOption.of({1: -1})


class TestCandidateSet:
    """Tests for candidate sets."""

    def test_rejects_infeasible_option(self):
        with pytest.raises(ValueError):
            CandidateSet(Grid.of(3), (ServiceOption.from_jobs([2, 2]),))

    def test_rejects_duplicates(self):
        option = ServiceOption.from_jobs([1])
        with pytest.raises(ValueError):
            CandidateSet(Grid.of(3), (option, option))

    def test_matrix(self):
        grid = Grid.of(3)
        cs = CandidateSet(grid, (ServiceOption.from_jobs([1, 2]), ServiceOption.from_jobs([3])))
        assert cs.matrix.tolist() == [[1, 1, 0], [0, 0, 1]]

    def test_text_round_trip(self):
        grid = Grid.of(4)
        cs = CandidateSet(grid, (ServiceOption.from_jobs([1, 3]), ServiceOption.from_jobs([4])))
        assert CandidateSet.from_text(grid, cs.to_text()).options == cs.options


class TestSimResult:
    """Tests for result serialization and invariants."""

    def test_dict_round_trip(self):
        result = SimResult(2.0, 10, 3, False, arrivals=12, in_system=2)
        assert SimResult.from_dict(result.to_dict()) == result

    def test_job_dict_round_trip(self):
        job = Job(3, (0.2, 0.4), 1.5, (1, 2))
        assert Job.from_dict(job.to_dict()) == job

    def test_conservation_violation(self):
        result = SimResult(2.0, 10, 3, False, arrivals=11, in_system=0)
        is_valid, error = validate_sim_result(result, 10_000, 1_000.0)
        assert not is_valid
        assert "conservation" in error

    def test_unstable_without_cutoff(self):
        result = SimResult(2.0, 10, 3, True, arrivals=10)
        assert not validate_sim_result(result, 10_000, 1_000.0)[0]

    def test_valid_result(self):
        result = SimResult(2.0, 10, 3, False, arrivals=12, in_system=2)
        assert validate_sim_result(result, 10_000, 1_000.0) == (True, None)

    def test_empty_run_has_nan_mean(self):
        assert math.isnan(SimResult(math.nan, 0, 0, False).mean_response_time)

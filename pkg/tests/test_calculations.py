"""
Tests for Stability Calculations

Tests cover:
- Discretization-level selection for the 2-Bucket and 2-Job families
- The Lipschitz supremum bound
- Stability boundaries and loads
- Erlang-C reference values
"""

import numpy as np
import pytest

from src.lab.calculations import (
    erlang_c,
    lipschitz_fixed_point,
    lipschitz_sup_bound,
    mmc_mean_response_time,
    select_K_2B,
    select_K_2J,
    select_K_2J_lipschitz,
    stability_boundary,
    stability_load,
)
from src.mrj.errors import NoStableKError, UnknownStabilityBoundaryError
from src.mrj.requirements import (
    ArrivalSpec,
    BoundedLomax,
    PointMass,
    Product,
    SymmetricTriangular,
    TriangularDecreasing,
    TruncatedNormal,
    Uniform,
)


# =============================================================================
# Tests: K selection
# =============================================================================

class TestSelectK:
    """Tests for select_K_2B and select_K_2J."""

    @pytest.mark.parametrize("lam,expected", [(2.7, 32), (1.5, 4), (2.0, 8), (0.5, 1)])
    def test_two_bucket(self, lam, expected):
        assert select_K_2B(lam, 1 / 3) == expected

    def test_two_bucket_unstable(self):
        with pytest.raises(NoStableKError):
            select_K_2B(3.0, 1 / 3)

    def test_two_bucket_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            select_K_2B(0.0, 1 / 3)

    @pytest.mark.parametrize("lam,d,expected", [(1.5, 1, 5), (1.9, 1, 21), (1.0, 2, 5), (0.5, 1, 1), (1.0, 1, 3)])
    def test_two_job(self, lam, d, expected):
        assert select_K_2J(lam, d) == expected

    def test_two_job_always_odd(self):
        for lam in np.linspace(0.05, 1.95, 39):
            assert select_K_2J(float(lam)) % 2 == 1

    def test_two_job_unstable(self):
        with pytest.raises(NoStableKError, match="no stable K exists"):
            select_K_2J(2.0)

    def test_two_job_non_uniform_multi_resource(self):
        with pytest.raises(ValueError):
            select_K_2J(1.0, d=2, uniform=False)

    def test_two_job_lipschitz(self):
        # uniform: C = 0, sup density 1 -> (1 * d) / (1/lam - 1/2)
        K = select_K_2J_lipschitz(1.0, d=2, lipschitz=0.0, sup_density=1.0, epsilon=0.0)
        assert K == 5
        with pytest.raises(NoStableKError):
            select_K_2J_lipschitz(1.999, d=1, lipschitz=0.0, epsilon=0.01)


# =============================================================================
# Tests: Lipschitz bound
# =============================================================================

class TestLipschitzBound:
    """Tests for the supremum bound of Lipschitz densities."""

    def test_known_values(self):
        assert lipschitz_sup_bound(2, 1) == pytest.approx(2.0, abs=1e-12)
        assert lipschitz_sup_bound(8, 1) == pytest.approx(4.0, abs=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_fixed_point(self, d):
        c_star = lipschitz_fixed_point(d)
        assert lipschitz_sup_bound(c_star, d) == pytest.approx(c_star)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_nondecreasing_in_C(self, d):
        values = [lipschitz_sup_bound(C, d) for C in np.linspace(0.0, 50.0, 100)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_constant_below_fixed_point(self):
        assert lipschitz_sup_bound(0.0, 2) == pytest.approx(lipschitz_sup_bound(lipschitz_fixed_point(2), 2))

    def test_invalid(self):
        with pytest.raises(ValueError):
            lipschitz_sup_bound(-1.0, 1)


# =============================================================================
# Tests: Stability boundary and load
# =============================================================================

class TestStabilityLoad:
    """Tests for lambda* and rho."""

    def test_uniform(self):
        assert stability_load(ArrivalSpec(1.8, Uniform())) == pytest.approx(0.9)

    def test_bounded_lomax(self):
        assert stability_load(ArrivalSpec(2.7, BoundedLomax())) == pytest.approx(0.9, abs=1e-8)

    def test_symmetric_families(self):
        assert stability_boundary(TruncatedNormal()) == 2.0
        assert stability_boundary(Product([Uniform(), TruncatedNormal()])) == 2.0

    def test_decreasing_density(self):
        assert stability_boundary(TriangularDecreasing()) == pytest.approx(3.0)

    def test_point_mass(self):
        assert stability_boundary(PointMass(0.25)) == 4.0
        assert stability_boundary(PointMass(0.3)) == 3.0

    def test_unknown_boundary(self):
        with pytest.raises(UnknownStabilityBoundaryError):
            stability_load(ArrivalSpec(1.0, SymmetricTriangular(0.25, 0.5)))

    def test_supplied_boundary(self):
        spec = ArrivalSpec(1.0, SymmetricTriangular(0.25, 0.5))
        assert stability_load(spec, lambda_star=2.5) == pytest.approx(0.4)

    def test_upper_bound(self):
        assert stability_load(ArrivalSpec(1.5, Uniform()), upper_bound=True) == pytest.approx(0.75)


# =============================================================================
# Tests: Erlang-C
# =============================================================================

class TestErlangC:
    """Reference values for the M/M/c checks."""

    def test_four_servers(self):
        assert erlang_c(4, 2.0) == pytest.approx(0.173913, abs=1e-6)
        assert mmc_mean_response_time(4, 2.0) == pytest.approx(1.086957, abs=1e-6)

    def test_single_server_is_mm1(self):
        assert erlang_c(1, 0.5) == pytest.approx(0.5)
        assert mmc_mean_response_time(1, 0.5) == pytest.approx(2.0)

    def test_overloaded(self):
        with pytest.raises(ValueError):
            erlang_c(2, 2.0)

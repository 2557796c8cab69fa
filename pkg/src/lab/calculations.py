"""
Stability Calculations

Closed-form quantities from the stability analysis: discretization-level
selection for the 2-Bucket and 2-Job policies, the system load against the
stability boundary, the supremum bound for Lipschitz densities, and the
Erlang-C response time used to check the simulator.
"""

from typing import Optional
import math

from src.mrj.errors import NoStableKError, UnknownStabilityBoundaryError
from src.mrj.requirements import (
    ArrivalSpec,
    BoundedLomax,
    PointMass,
    Product,
    RequirementDist,
    TriangularDecreasing,
    TruncatedNormal,
    Uniform,
)

# slack for floor/ceil of ratios that are integers in exact arithmetic
ROUNDING_TOL = 1e-9


def _floor(x: float) -> int:
    return math.floor(x + ROUNDING_TOL)


def _smallest_odd_at_least(bound: float) -> int:
    k = max(1, math.ceil(bound - ROUNDING_TOL))
    return k if k % 2 else k + 1


def select_K_2B(lam: float, mean_v: float) -> int:
    """
    Discretization level K = 2^L for the 2-Bucket policies.

    L = floor(-log2(1/lam - E V)) + 1, and at least 0.

    Args:
        lam: Arrival rate
        mean_v: Mean requirement E V

    Returns:
        K as a power of two

    Raises:
        NoStableKError: If lam * E V >= 1 (no policy is stable)
    """
    if lam <= 0:
        raise ValueError(f"Arrival rate must be positive, got {lam}")
    if lam * mean_v >= 1.0 - 1e-12:
        raise NoStableKError(f"lambda * E V = {lam * mean_v:.6g} >= 1: no stable K exists")
    L = max(0, _floor(-math.log2(1.0 / lam - mean_v)) + 1)
    return 2 ** L


def select_K_2J(lam: float, d: int = 1, uniform: bool = True) -> int:
    """
    Smallest odd K for the 2-Job policies.

    Single resource: K >= floor(lam / (2 - lam)) + 1. Uniform requirements
    on (0,1]^d: K >= floor(2 lam d / (2 - lam)) + 1.

    Raises:
        NoStableKError: If lam >= 2
        ValueError: For d >= 2 without uniform requirements
    """
    if lam >= 2.0:
        raise NoStableKError(f"lambda = {lam:g} >= 2: no stable K exists")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if d == 1:
        bound = _floor(lam / (2.0 - lam)) + 1
    elif uniform:
        bound = _floor(2.0 * lam * d / (2.0 - lam)) + 1
    else:
        raise ValueError("For d >= 2 use select_K_2J_lipschitz for non-uniform densities")
    return _smallest_odd_at_least(bound)


def lipschitz_sup_bound(C: float, d: int) -> float:
    """
    Upper bound on the supremum of a C-Lipschitz density on [0,1]^d.

    L(C, d) = [(d+1) pi^(d/2) max(C, C*)^d / (2^d Gamma(d/2+1))]^(1/(d+1)),
    where C* = (d+1) pi^(d/2) / (2^d Gamma(d/2+1)) is the fixed point.
    """
    if C < 0 or d < 1:
        raise ValueError(f"Need C >= 0 and d >= 1, got C={C}, d={d}")
    unit = (d + 1) * math.pi ** (d / 2.0) / (2 ** d * math.gamma(d / 2.0 + 1.0))
    c = max(C, unit)
    return (unit * c ** d) ** (1.0 / (d + 1))


def lipschitz_fixed_point(d: int) -> float:
    """C*(d), below which the bound L(C, d) is constant."""
    return (d + 1) * math.pi ** (d / 2.0) / (2 ** d * math.gamma(d / 2.0 + 1.0))


def select_K_2J_lipschitz(
    lam: float,
    d: int,
    lipschitz: float,
    sup_density: Optional[float] = None,
    epsilon: float = 1e-3,
) -> int:
    """
    Odd K for 2-Job policies under a centrally symmetric C-Lipschitz density.

    K >= (1/((1+eps) lam) - 1/2)^(-1) * (L d + C sqrt(d) / 2), where L bounds
    the density (the Lipschitz supremum bound unless sup_density is given).

    Raises:
        NoStableKError: If (1+eps) lam >= 2
    """
    scaled = (1.0 + epsilon) * lam
    if scaled >= 2.0:
        raise NoStableKError(f"(1+eps) lambda = {scaled:g} >= 2: no stable K exists")
    L = sup_density if sup_density is not None else lipschitz_sup_bound(lipschitz, d)
    bound = (L * d + lipschitz * math.sqrt(d) / 2.0) / (1.0 / scaled - 0.5)
    return _smallest_odd_at_least(bound)


def _is_symmetric_half(dist: RequirementDist) -> bool:
    if isinstance(dist, Uniform):
        return True
    if isinstance(dist, TruncatedNormal):
        return abs(dist.mu - 0.5) < 1e-12
    if isinstance(dist, Product):
        return all(_is_symmetric_half(c) for c in dist.components)
    return False


def stability_boundary(dist: RequirementDist) -> float:
    """
    Built-in stability boundary lambda* for distribution families where it is known.

    Centrally symmetric about 1/2: 2. Weakly decreasing density: 1 / E V.
    Point mass v: floor(1/v) parallel servers.

    Raises:
        UnknownStabilityBoundaryError: For other families
    """
    if _is_symmetric_half(dist):
        return 2.0
    if isinstance(dist, (TriangularDecreasing, BoundedLomax)):
        return 1.0 / dist.expectation()
    if isinstance(dist, PointMass):
        return float(_floor(1.0 / dist.value))
    raise UnknownStabilityBoundaryError(
        f"The stability boundary of {dist.describe()} is unknown; supply lambda* explicitly"
    )


def stability_load(spec: ArrivalSpec, lambda_star: Optional[float] = None, upper_bound: bool = False) -> float:
    """
    System load of an arrival spec.

    Args:
        spec: Arrival rate and requirement distribution
        lambda_star: Stability boundary; built-in value used when omitted
        upper_bound: Use lambda * max_l E V_l instead of lambda / lambda*

    Returns:
        Load rho > 0

    Raises:
        UnknownStabilityBoundaryError: If lambda* is neither supplied nor built in
    """
    if upper_bound:
        return spec.load_upper_bound
    boundary = lambda_star if lambda_star is not None else stability_boundary(spec.dist)
    if boundary <= 0:
        raise ValueError(f"lambda* must be positive, got {boundary}")
    return spec.lam / boundary


def erlang_c(servers: int, offered_load: float) -> float:
    """
    Probability that an arrival waits in an M/M/c queue.

    Args:
        servers: Number of servers c
        offered_load: a = lambda / mu, with a < c

    Returns:
        Erlang-C waiting probability
    """
    c, a = servers, offered_load
    if not 0 <= a < c:
        raise ValueError(f"Need 0 <= a < c, got a={a}, c={c}")
    term = 1.0
    partial = 1.0
    for k in range(1, c):
        term *= a / k
        partial += term
    tail = term * a / c * c / (c - a)
    return tail / (partial + tail)


def mmc_mean_response_time(servers: int, lam: float, mu: float = 1.0) -> float:
    """Mean sojourn time of an M/M/c queue: 1/mu + P_wait / (c mu - lam)."""
    p_wait = erlang_c(servers, lam / mu)
    return 1.0 / mu + p_wait / (servers * mu - lam)

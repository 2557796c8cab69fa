"""
Requirement Distributions

This module provides the parametric and empirical distributions of job
resource requirements: densities, seeded sampling, means, and the per-bucket
masses that define the K-discretized arrival measure.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import DimensionMismatchError, InvalidJobTypeError
from .models import Requirement, as_requirement, as_type_index, bucket_index

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 10_000


class RequirementDist(ABC):
    """Abstract base class for requirement distributions on (0,1]^d."""

    @property
    @abstractmethod
    def d(self) -> int:
        """Number of resources."""
        pass

    @abstractmethod
    def pdf(self, v: Union[float, Sequence[float]]) -> float:
        """
        Density at a requirement vector.

        Args:
            v: Requirement vector (scalar allowed when d=1)

        Returns:
            Nonnegative density, zero outside the support
        """
        pass

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> Requirement:
        """Draw one requirement vector from the distribution."""
        pass

    @abstractmethod
    def mean(self) -> Tuple[float, ...]:
        """Per-coordinate expectation."""
        pass

    @abstractmethod
    def bucket_masses(self, K: Union[int, Sequence[int]]) -> np.ndarray:
        """Probability of every job type, in the grid's flat (row-major) order."""
        pass

    @abstractmethod
    def describe(self) -> str:
        """Config string that parse_distribution turns back into this distribution."""
        pass

    def bucket_probability(self, K: Union[int, Sequence[int]], i: Union[int, Sequence[int]]) -> float:
        """
        Probability that a requirement falls in the box of job type i.

        Args:
            K: Discretization vector
            i: Job type index (1-based per coordinate)

        Returns:
            P(V in I_i)

        Raises:
            InvalidJobTypeError: If i is not a type of the grid
        """
        K_t = as_type_index(K)
        i_t = as_type_index(i)
        if len(K_t) != self.d or len(i_t) != self.d:
            raise DimensionMismatchError(f"Expected {self.d}-dimensional K and type, got K={K_t}, i={i_t}")
        if any(not 1 <= ii <= kk for ii, kk in zip(i_t, K_t)):
            raise InvalidJobTypeError(f"Type {i_t} outside grid K={K_t}")
        flat = 0
        for kk, ii in zip(K_t, i_t):
            flat = flat * kk + (ii - 1)
        return float(self.bucket_masses(K_t)[flat])

    def lipschitz_constant(self) -> Optional[float]:
        """Lipschitz constant of the density on [0,1]^d, when known in closed form."""
        return None

    def sup_density(self) -> Optional[float]:
        """Supremum of the density, when known in closed form."""
        return None

    def _check_dim(self, v: Union[float, Sequence[float]]) -> Requirement:
        vec = as_requirement(v)
        if len(vec) != self.d:
            raise DimensionMismatchError(f"Requirement {vec} has dimension {len(vec)}, distribution has {self.d}")
        return vec

    def __repr__(self) -> str:
        return f"{type(self).__name__}('{self.describe()}')"


class UnivariateDist(RequirementDist):
    """A distribution of a single resource requirement with a closed-form CDF."""

    @property
    def d(self) -> int:
        return 1

    @abstractmethod
    def density(self, x: float) -> float:
        pass

    @abstractmethod
    def cdf(self, x: float) -> float:
        pass

    @abstractmethod
    def draw(self, rng: np.random.Generator) -> float:
        """One raw draw; may return 0 with negligible probability."""
        pass

    @abstractmethod
    def expectation(self) -> float:
        pass

    def pdf(self, v: Union[float, Sequence[float]]) -> float:
        (x,) = self._check_dim(v)
        if x < 0.0 or x > 1.0:
            return 0.0
        return self.density(x)

    def sample(self, rng: np.random.Generator) -> Requirement:
        for _ in range(MAX_REJECTIONS):
            x = self.draw(rng)
            if 0.0 < x <= 1.0:
                return (x,)
        raise RuntimeError(f"{self!r} failed to produce a value in (0, 1]")

    def mean(self) -> Tuple[float, ...]:
        return (self.expectation(),)

    def bucket_masses(self, K: Union[int, Sequence[int]]) -> np.ndarray:
        (k,) = as_type_index(K)
        edges = np.array([self.cdf(j / k) for j in range(k + 1)])
        return np.clip(np.diff(edges), 0.0, None)


class Uniform(UnivariateDist):
    """Uniform requirement on (0, 1]."""

    def density(self, x: float) -> float:
        return 1.0

    def cdf(self, x: float) -> float:
        return min(max(x, 0.0), 1.0)

    def draw(self, rng: np.random.Generator) -> float:
        return 1.0 - rng.random()

    def expectation(self) -> float:
        return 0.5

    def lipschitz_constant(self) -> Optional[float]:
        return 0.0

    def sup_density(self) -> Optional[float]:
        return 1.0

    def describe(self) -> str:
        return "uniform"


class TruncatedNormal(UnivariateDist):
    """Normal(mean, sd) conditioned on [0, 1]; sampled by rejection."""

    def __init__(self, mu: float = 0.5, sigma: float = 1.0):
        if sigma <= 0:
            raise ValueError(f"sd must be positive, got {sigma}")
        self.mu = float(mu)
        self.sigma = float(sigma)
        self._lo = norm.cdf((0.0 - self.mu) / self.sigma)
        self._mass = norm.cdf((1.0 - self.mu) / self.sigma) - self._lo
        if self._mass <= 0:
            raise ValueError("Truncated normal has no mass on [0, 1]")

    def density(self, x: float) -> float:
        return float(norm.pdf((x - self.mu) / self.sigma) / (self.sigma * self._mass))

    def cdf(self, x: float) -> float:
        x = min(max(x, 0.0), 1.0)
        return float((norm.cdf((x - self.mu) / self.sigma) - self._lo) / self._mass)

    def draw(self, rng: np.random.Generator) -> float:
        for _ in range(MAX_REJECTIONS):
            x = rng.normal(self.mu, self.sigma)
            if 0.0 < x <= 1.0:
                return float(x)
        raise RuntimeError(f"Rejection sampling of {self!r} did not terminate")

    def expectation(self) -> float:
        a = (0.0 - self.mu) / self.sigma
        b = (1.0 - self.mu) / self.sigma
        return float(self.mu + self.sigma * (norm.pdf(a) - norm.pdf(b)) / self._mass)

    def lipschitz_constant(self) -> Optional[float]:
        # |f'(x)| = t * phi(t / sigma) / (sigma^3 * mass) with t = |x - mu|, increasing until t = sigma
        reach = max(abs(self.mu), abs(1.0 - self.mu))
        t = min(self.sigma, reach)
        return float(t * norm.pdf(t / self.sigma) / (self.sigma ** 3 * self._mass))

    def sup_density(self) -> Optional[float]:
        peak = min(max(self.mu, 0.0), 1.0)
        return self.density(peak)

    def describe(self) -> str:
        return f"truncated-normal:{self.mu:g},{self.sigma:g}"


class BoundedLomax(UnivariateDist):
    """Lomax(shape, scale) restricted to [0, 1]; sampled by inverse CDF."""

    def __init__(self, shape: float = 2.0, scale: float = 1.0):
        if shape <= 0 or scale <= 0:
            raise ValueError(f"shape and scale must be positive, got {shape}, {scale}")
        self.shape = float(shape)
        self.scale = float(scale)
        self._mass = 1.0 - (1.0 + 1.0 / self.scale) ** (-self.shape)

    def density(self, x: float) -> float:
        a, s = self.shape, self.scale
        return a / s * (1.0 + x / s) ** (-(a + 1.0)) / self._mass

    def cdf(self, x: float) -> float:
        x = min(max(x, 0.0), 1.0)
        return (1.0 - (1.0 + x / self.scale) ** (-self.shape)) / self._mass

    def draw(self, rng: np.random.Generator) -> float:
        u = 1.0 - rng.random()
        return self.scale * ((1.0 - u * self._mass) ** (-1.0 / self.shape) - 1.0)

    def expectation(self) -> float:
        value, _ = integrate.quad(lambda x: x * self.density(x), 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
        return float(value)

    def lipschitz_constant(self) -> Optional[float]:
        a, s = self.shape, self.scale
        return a * (a + 1.0) / (s * s * self._mass)

    def sup_density(self) -> Optional[float]:
        return self.density(0.0)

    def describe(self) -> str:
        return f"bounded-lomax:{self.shape:g},{self.scale:g}"


class TriangularDecreasing(UnivariateDist):
    """Density 2 - 2v on [0, 1]."""

    def density(self, x: float) -> float:
        return 2.0 - 2.0 * x

    def cdf(self, x: float) -> float:
        x = min(max(x, 0.0), 1.0)
        return 2.0 * x - x * x

    def draw(self, rng: np.random.Generator) -> float:
        u = 1.0 - rng.random()
        return 1.0 - math.sqrt(1.0 - u)

    def expectation(self) -> float:
        return 1.0 / 3.0

    def lipschitz_constant(self) -> Optional[float]:
        return 2.0

    def sup_density(self) -> Optional[float]:
        return 2.0

    def describe(self) -> str:
        return "triangular"


class SymmetricTriangular(UnivariateDist):
    """Isosceles triangle density on [lower, upper]."""

    def __init__(self, lower: float, upper: float):
        if not 0.0 <= lower < upper <= 1.0:
            raise ValueError(f"Need 0 <= lower < upper <= 1, got {lower}, {upper}")
        self.lower = float(lower)
        self.upper = float(upper)

    @property
    def _width(self) -> float:
        return self.upper - self.lower

    def density(self, x: float) -> float:
        lo, hi, w = self.lower, self.upper, self._width
        if x < lo or x > hi:
            return 0.0
        if x <= (lo + hi) / 2.0:
            return 4.0 * (x - lo) / (w * w)
        return 4.0 * (hi - x) / (w * w)

    def cdf(self, x: float) -> float:
        lo, hi, w = self.lower, self.upper, self._width
        if x <= lo:
            return 0.0
        if x >= hi:
            return 1.0
        if x <= (lo + hi) / 2.0:
            return 2.0 * (x - lo) ** 2 / (w * w)
        return 1.0 - 2.0 * (hi - x) ** 2 / (w * w)

    def draw(self, rng: np.random.Generator) -> float:
        u = rng.random()
        if u <= 0.5:
            return self.lower + self._width * math.sqrt(u / 2.0)
        return self.upper - self._width * math.sqrt((1.0 - u) / 2.0)

    def expectation(self) -> float:
        return (self.lower + self.upper) / 2.0

    def lipschitz_constant(self) -> Optional[float]:
        return 4.0 / (self._width ** 2)

    def sup_density(self) -> Optional[float]:
        return 2.0 / self._width

    def describe(self) -> str:
        return f"symmetric-triangular:{self.lower:g},{self.upper:g}"


class PointMass(UnivariateDist):
    """
    Degenerate requirement v. Not a continuous law; used for M/M/1 and
    M/M/c checks where analytic response times are known.
    """

    def __init__(self, value: float):
        if not 0.0 < value <= 1.0:
            raise ValueError(f"Point mass must lie in (0, 1], got {value}")
        self.value = float(value)

    def density(self, x: float) -> float:
        return math.inf if x == self.value else 0.0

    def cdf(self, x: float) -> float:
        return 1.0 if x >= self.value else 0.0

    def draw(self, rng: np.random.Generator) -> float:
        return self.value

    def expectation(self) -> float:
        return self.value

    def bucket_masses(self, K: Union[int, Sequence[int]]) -> np.ndarray:
        (k,) = as_type_index(K)
        masses = np.zeros(k)
        masses[bucket_index(self.value, k) - 1] = 1.0
        return masses

    def describe(self) -> str:
        return f"point-mass:{self.value:g}"


class Empirical(UnivariateDist):
    """
    The empirical law of a finite multiset of requirements (e.g. a trace).

    Bucket masses are exact counts; pdf returns the point mass at v.
    """

    def __init__(self, values: Sequence[float], label: str = "empirical"):
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise ValueError("Empirical distribution needs at least one value")
        if arr[0] <= 0.0 or arr[-1] > 1.0:
            raise ValueError("Empirical values must lie in (0, 1]")
        self.values = arr
        self.label = label
        logger.debug(f"Empirical distribution '{label}' over {arr.size} values, mean {arr.mean():.4g}")

    def density(self, x: float) -> float:
        lo = np.searchsorted(self.values, x, side="left")
        hi = np.searchsorted(self.values, x, side="right")
        return float(hi - lo) / self.values.size

    def cdf(self, x: float) -> float:
        return float(np.searchsorted(self.values, x, side="right")) / self.values.size

    def draw(self, rng: np.random.Generator) -> float:
        return float(self.values[rng.integers(self.values.size)])

    def expectation(self) -> float:
        return float(self.values.mean())

    def bucket_masses(self, K: Union[int, Sequence[int]]) -> np.ndarray:
        (k,) = as_type_index(K)
        x = self.values
        j = np.ceil(k * x)
        j = np.where((j - 1) / k >= x, j - 1, j)
        j = np.where(j / k < x, j + 1, j)
        j = np.clip(j, 1, k).astype(np.int64)
        return np.bincount(j - 1, minlength=k) / x.size

    def describe(self) -> str:
        return self.label


class Product(RequirementDist):
    """Independent coordinates, one univariate law per resource."""

    def __init__(self, components: Sequence[UnivariateDist]):
        if len(components) < 1:
            raise ValueError("Product needs at least one component")
        self.components: List[UnivariateDist] = list(components)

    @property
    def d(self) -> int:
        return len(self.components)

    def pdf(self, v: Union[float, Sequence[float]]) -> float:
        vec = self._check_dim(v)
        return math.prod(c.pdf(x) for c, x in zip(self.components, vec))

    def sample(self, rng: np.random.Generator) -> Requirement:
        return tuple(c.sample(rng)[0] for c in self.components)

    def mean(self) -> Tuple[float, ...]:
        return tuple(c.expectation() for c in self.components)

    def bucket_masses(self, K: Union[int, Sequence[int]]) -> np.ndarray:
        K_t = as_type_index(K)
        if len(K_t) != self.d:
            raise DimensionMismatchError(f"K={K_t} does not match dimension {self.d}")
        masses = self.components[0].bucket_masses(K_t[0])
        for comp, k in zip(self.components[1:], K_t[1:]):
            masses = np.multiply.outer(masses, comp.bucket_masses(k))
        return np.asarray(masses).ravel()

    def lipschitz_constant(self) -> Optional[float]:
        consts = [c.lipschitz_constant() for c in self.components]
        sups = [c.sup_density() for c in self.components]
        if any(x is None for x in consts + sups):
            return None
        # gradient norm bound of a product of bounded Lipschitz factors
        total = 0.0
        for j, cj in enumerate(consts):
            others = math.prod(s for m, s in enumerate(sups) if m != j)
            total += (cj * others) ** 2
        return math.sqrt(total)

    def sup_density(self) -> Optional[float]:
        sups = [c.sup_density() for c in self.components]
        if any(s is None for s in sups):
            return None
        return math.prod(sups)

    def describe(self) -> str:
        return "product:" + "|".join(c.describe() for c in self.components)


def parse_distribution(text: str) -> RequirementDist:
    """
    Build a distribution from its config string.

    Accepted forms: uniform, truncated-normal[:mean,sd], bounded-lomax[:shape,scale],
    triangular, symmetric-triangular:lo,hi, point-mass:v, product:a|b|...

    Raises:
        ValueError: If the name or parameters are not understood
    """
    text = text.strip()
    name, _, params = text.partition(":")
    name = name.strip().lower()

    if name == "product":
        parts = [parse_distribution(p) for p in params.split("|") if p.strip()]
        if any(not isinstance(p, UnivariateDist) for p in parts):
            raise ValueError("product components must be one-dimensional")
        return Product(parts)  # type: ignore[arg-type]

    try:
        args = [float(x) for x in params.split(",") if x.strip()]
    except ValueError as e:
        raise ValueError(f"Invalid parameters in distribution '{text}': {e}")

    if name in ("uniform", "unif"):
        return Uniform()
    if name in ("truncated-normal", "tn"):
        return TruncatedNormal(*args) if args else TruncatedNormal()
    if name in ("bounded-lomax", "blomax", "lomax"):
        return BoundedLomax(*args) if args else BoundedLomax()
    if name in ("triangular", "tri", "triangular-decreasing"):
        return TriangularDecreasing()
    if name in ("symmetric-triangular", "symtri"):
        if len(args) != 2:
            raise ValueError("symmetric-triangular needs lower,upper")
        return SymmetricTriangular(*args)
    if name in ("point-mass", "pointmass", "point"):
        if len(args) != 1:
            raise ValueError("point-mass needs a single value")
        return PointMass(args[0])

    raise ValueError(f"Unknown distribution '{name}'")


@dataclass(frozen=True)
class ArrivalSpec:
    """
    Poisson arrivals at rate lam with i.i.d. requirements drawn from dist.

    Attributes:
        lam: Arrival rate (jobs per unit time), > 0
        dist: Requirement distribution
    """

    lam: float
    dist: RequirementDist

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"Arrival rate must be positive, got {self.lam}")

    @property
    def load_upper_bound(self) -> float:
        """lambda * max_l E V_l; no policy is stable once this reaches 1."""
        return self.lam * max(self.dist.mean())

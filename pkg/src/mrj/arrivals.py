"""
Arrival Streams

An arrival stream hands the engine one (epoch, requirement) pair at a
time. Poisson arrivals with i.i.d. requirements draw from the run's own
generator; trace replay fixes the requirement order and precomputes the
Poisson epochs from a separate seed.
"""

from abc import ABC, abstractmethod
from typing import NamedTuple, Optional, Sequence
import logging

import numpy as np

from .models import Requirement, as_requirement
from .requirements import ArrivalSpec

logger = logging.getLogger(__name__)


class Arrival(NamedTuple):
    epoch: float
    requirement: Requirement


class ArrivalStream(ABC):
    """Source of arrivals for one simulation run."""

    @abstractmethod
    def next(self, rng: np.random.Generator) -> Optional[Arrival]:
        """The next arrival, or None once the stream is exhausted."""

    @abstractmethod
    def __len__(self) -> int:
        """Total number of arrivals the stream produces."""


class PoissonArrivals(ArrivalStream):
    """Poisson(lam) epochs with requirements sampled i.i.d. from the ArrivalSpec distribution."""

    def __init__(self, spec: ArrivalSpec, n_jobs: int):
        self.spec = spec
        self.n_jobs = n_jobs
        self._produced = 0
        self._clock = 0.0

    def next(self, rng: np.random.Generator) -> Optional[Arrival]:
        if self._produced >= self.n_jobs:
            return None
        self._clock += rng.exponential(1.0 / self.spec.lam)
        self._produced += 1
        return Arrival(self._clock, self.spec.dist.sample(rng))

    def __len__(self) -> int:
        return self.n_jobs


class TraceArrivals(ArrivalStream):
    """
    Requirements replayed in trace order at Poisson(lam) epochs.

    The epochs depend only on seed, so the same seed replays identically.
    """

    def __init__(self, values: Sequence[float], lam: float, seed: int = 0):
        if not lam > 0:
            raise ValueError(f"Arrival rate must be positive, got {lam}")
        self.requirements = [as_requirement(v) for v in values]
        self.lam = lam
        self.seed = seed
        gaps = np.random.default_rng(seed).exponential(1.0 / lam, size=len(self.requirements))
        self.epochs = np.cumsum(gaps)
        self._pos = 0
        logger.debug(f"Replaying {len(self.requirements)} requirements at lambda={lam:g} (seed {seed})")

    def next(self, rng: np.random.Generator) -> Optional[Arrival]:
        if self._pos >= len(self.requirements):
            return None
        arrival = Arrival(float(self.epochs[self._pos]), self.requirements[self._pos])
        self._pos += 1
        return arrival

    def __len__(self) -> int:
        return len(self.requirements)

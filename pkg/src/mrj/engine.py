"""
Simulation Engine

Event-driven simulation of the MRJ queue. Services are Exp(1), so the
completing job is uniform over the jobs in service and no per-job timers
are kept. Arrival epochs come from an ArrivalStream; service completions
and nMSR switches are drawn from one exponential clock per step.
"""

from dataclasses import dataclass, replace
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple
import logging
import math
import time

import numpy as np
from tqdm import tqdm

from .arrivals import ArrivalStream, PoissonArrivals, TraceArrivals
from .discretization import job_type
from .errors import FeasibilityViolationError, MRJError
from .models import Grid, Job, SimResult
from .policies import DEFAULT_THETA, Policy, SystemState, make_policy
from .requirements import ArrivalSpec

logger = logging.getLogger(__name__)

AUDIT_TOL = 1e-12


@dataclass
class SimConfig:
    """
    One simulation run.

    Attributes:
        spec: Arrival rate and requirement distribution
        policy: Policy name, e.g. '2j-emw-b'
        grid: Discretization for the MaxWeight and nMSR families
        n_jobs: Number of arrivals to simulate
        seed: Seed of the run's generator
        max_queue: Instability cutoff on jobs in system
        max_mrt: Instability cutoff on the running mean response time
        warmup: Number of leading jobs left out of the mean
        theta: nMSR switch rate
        epsilon: Margin for nMSR constructions
        backfill_order: Scan order of backfilling passes
        use_lp: Precompute nMSR mixes with the LP
        trace: Requirements to replay in order instead of sampling
        mrt_check_every: Events between running-MRT checks
        audit: Check capacity after every event
    """

    spec: ArrivalSpec
    policy: str
    grid: Optional[Grid] = None
    n_jobs: int = 1_000_000
    seed: int = 0
    max_queue: int = 10_000
    max_mrt: float = 1_000.0
    warmup: int = 0
    theta: float = DEFAULT_THETA
    epsilon: float = 1e-3
    backfill_order: str = "arrival"
    use_lp: bool = False
    trace: Optional[Tuple[float, ...]] = None
    mrt_check_every: int = 10_000
    audit: bool = True

    def build_policy(self) -> Policy:
        return make_policy(
            self.policy,
            grid=self.grid,
            spec=self.spec,
            theta=self.theta,
            epsilon=self.epsilon,
            backfill_order=self.backfill_order,
            use_lp=self.use_lp,
        )

    def arrivals(self) -> ArrivalStream:
        if self.trace is not None:
            return TraceArrivals(self.trace[: self.n_jobs], self.spec.lam, self.seed)
        return PoissonArrivals(self.spec, self.n_jobs)


def validate_sim_config(config: SimConfig) -> tuple[bool, Optional[str]]:
    """
    Validate a simulation config.

    Returns:
        Tuple of (is_valid, error_message)
    """
    if config.n_jobs < 1:
        return False, "n_jobs must be at least 1"
    if config.max_queue < 1 or not config.max_mrt > 0:
        return False, "Instability cutoffs must be positive"
    if config.warmup < 0:
        return False, "warmup must be nonnegative"
    if config.mrt_check_every < 1:
        return False, "mrt_check_every must be at least 1"
    if config.grid is not None and config.grid.d != config.spec.dist.d:
        return False, f"Grid dimension {config.grid.d} differs from requirement dimension {config.spec.dist.d}"
    if config.trace is not None and not config.trace:
        return False, "trace is empty"
    return True, None


def _audit(state: SystemState, served: List[int], t: float) -> None:
    used = np.zeros(state.d)
    for i in served:
        used += state.requirement(i)
    if np.any(used > 1.0 + AUDIT_TOL):
        raise FeasibilityViolationError(f"Capacity exceeded at t={t:.6g}: usage {used.tolist()}")


def run_simulation(config: SimConfig, arrivals: Optional[ArrivalStream] = None) -> SimResult:
    """
    Simulate one run.

    Stops once every arrival has been processed and completed, or as soon
    as an instability cutoff fires: more than max_queue jobs in system, or
    a running mean response time above max_mrt (checked every
    mrt_check_every events over completed jobs).

    Args:
        config: Run configuration
        arrivals: Stream overriding the one the config describes

    Returns:
        SimResult; instability is a flag, not an error

    Raises:
        ConfigError: If the policy cannot be built
        FeasibilityViolationError: If an audit finds capacity exceeded
    """
    is_valid, error = validate_sim_config(config)
    if not is_valid:
        raise ValueError(f"Invalid simulation config: {error}")

    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    policy = config.build_policy()
    policy.reset(rng)
    stream = arrivals if arrivals is not None else config.arrivals()
    grid = policy.grid
    state = SystemState(grid)

    t = 0.0
    area = 0.0
    served: List[int] = []
    n_arrivals = completed = counted = events = max_queue_len = 0
    rt_sum = 0.0
    unstable = False
    reason = ""
    upcoming = stream.next(rng)

    while upcoming is not None or state.jobs:
        rate = len(served) + policy.switch_rate
        dt = rng.exponential(1.0 / rate) if rate > 0 else math.inf

        if upcoming is not None and upcoming.epoch <= t + dt:
            area += len(state) * (upcoming.epoch - t)
            t = upcoming.epoch
            typ = job_type(upcoming.requirement, grid) if grid is not None else None
            state.add(Job(n_arrivals, upcoming.requirement, t, typ))
            n_arrivals += 1
            upcoming = stream.next(rng)
            max_queue_len = max(max_queue_len, len(state))
            if len(state) > config.max_queue:
                unstable, reason = True, "queue"
                break
        elif math.isinf(dt):
            unstable, reason = True, "stalled"
            logger.warning(f"{policy.name}: no job can be served at t={t:.6g} with {len(state)} in system")
            break
        else:
            area += len(state) * dt
            t += dt
            u = rng.random() * rate
            if u < len(served):
                job = state.remove(served[int(u)])
                completed += 1
                if job.id >= config.warmup:
                    rt_sum += t - job.arrival_time
                    counted += 1
            else:
                policy.on_switch(rng)

        events += 1
        schedule = policy.schedule(state)
        served = schedule.served
        state.in_service = set(served)
        if config.audit:
            _audit(state, served, t)

        if events % config.mrt_check_every == 0 and counted and rt_sum / counted > config.max_mrt:
            unstable, reason = True, "mrt"
            break

    result = SimResult(
        mean_response_time=rt_sum / counted if counted else math.nan,
        completed=completed,
        max_queue_len=max_queue_len,
        unstable=unstable,
        wall_clock=time.perf_counter() - started,
        seed=config.seed,
        arrivals=n_arrivals,
        in_system=len(state),
        events=events,
        mean_jobs_in_system=area / t if t > 0 else 0.0,
        sim_time=t,
        reason=reason,
    )
    if unstable:
        logger.warning(
            f"{policy.name} at lambda={config.spec.lam:g}: instability cutoff ({reason}) after {events} events"
        )
    logger.info(f"Finished {policy.name} at lambda={config.spec.lam:g}: {result}")
    return result


@dataclass
class SweepRow:
    """One run of a sweep: its config, and a result or the error it raised."""

    config: SimConfig
    load: float
    result: Optional[SimResult] = None
    error: Optional[str] = None
    load_is_rho: bool = False

    @property
    def rho(self) -> Optional[float]:
        return self.load if self.load_is_rho else None


def _run_row(row: SweepRow) -> SweepRow:
    try:
        row.result = run_simulation(row.config)
    except (MRJError, ValueError) as e:
        logger.warning(f"Run {row.config.policy} at lambda={row.config.spec.lam:g} failed: {e}")
        row.error = str(e)
    except Exception as e:
        # recorded on the row; the remaining rows still run
        logger.exception(f"Run {row.config.policy} at lambda={row.config.spec.lam:g} crashed")
        row.error = f"{type(e).__name__}: {e}"
    return row


def run_rows(rows: Sequence[SweepRow], workers: int = 1, progress: bool = False) -> List[SweepRow]:
    """
    Run prepared sweep rows, in parallel when workers > 1.

    Results keep the input order whatever order the runs finish in.
    """
    rows = list(rows)
    if workers > 1 and len(rows) > 1:
        with Pool(min(workers, len(rows))) as pool:
            it = pool.imap(_run_row, rows)
            return list(tqdm(it, total=len(rows), desc="runs", disable=not progress))
    return [_run_row(r) for r in tqdm(rows, desc="runs", disable=not progress)]


def sweep(
    base: SimConfig,
    loads: Sequence[float],
    lambda_star: Optional[float] = None,
    workers: int = 1,
    progress: bool = False,
) -> List[SweepRow]:
    """
    One independent run per load with seed base.seed + index.

    Args:
        base: Template config; its arrival rate is replaced per load
        loads: Arrival rates, or loads rho when lambda_star is given
        lambda_star: Stability boundary turning rho into lambda = rho * lambda*
        workers: Parallel worker processes

    Returns:
        Rows in input order; failed runs carry an error instead of a result
    """
    rows = []
    for index, load in enumerate(loads):
        lam = load * lambda_star if lambda_star is not None else load
        spec = ArrivalSpec(lam, base.spec.dist)
        config = replace(base, spec=spec, seed=base.seed + index)
        rows.append(SweepRow(config=config, load=load, load_is_rho=lambda_star is not None))
    return run_rows(rows, workers, progress)

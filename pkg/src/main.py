#!/usr/bin/env python3
"""
MRJ Lab CLI Entry Point

This module provides the command-line interface for running policy sweeps
on synthetic and trace workloads, checking dominance of service mixes,
selecting discretization levels and dumping candidate sets.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.config import ExperimentConfig, validate_experiment_config
from src.lab.calculations import (
    select_K_2B,
    select_K_2J,
    select_K_2J_lipschitz,
    stability_boundary,
)
from src.lab.dominance import (
    DEFAULT_EPSILON,
    RateVector,
    check_dominance,
    construct_beta_2B,
    construct_beta_2J,
    max_dominance_lp,
)
from src.mrj.discretization import build_candidates
from src.mrj.engine import SimConfig, SweepRow, run_rows
from src.mrj.errors import ConfigError, MRJError, UnknownStabilityBoundaryError
from src.mrj.models import Grid
from src.mrj.requirements import ArrivalSpec, Product, RequirementDist, Uniform, parse_distribution
from src.mrj.trace import TraceLoader

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "policy",
    "distribution",
    "lambda",
    "rho",
    "K",
    "seed",
    "n_jobs",
    "mean_response_time",
    "max_queue_len",
    "unstable",
]


# =============================================================================
# Sweep helpers
# =============================================================================

def _lambda_star(config: ExperimentConfig, dist: RequirementDist) -> Optional[float]:
    if config.lambda_star is not None:
        return config.lambda_star
    try:
        return stability_boundary(dist)
    except UnknownStabilityBoundaryError:
        if config.rhos:
            raise
        logger.info(f"No built-in lambda* for {dist.describe()}; rho column left blank")
        return None


def plan_rows(
    config: ExperimentConfig,
    dist: RequirementDist,
    trace: Optional[Sequence[float]] = None,
) -> List[SweepRow]:
    """
    One row per (policy, load); run j of every policy uses seed + j.

    Raises:
        UnknownStabilityBoundaryError: If loads are given as rho and lambda* is unknown
    """
    lambda_star = _lambda_star(config, dist)
    loads = config.rhos or config.lambdas
    rows = []
    for policy in config.policies:
        for index, load in enumerate(loads):
            lam = load * lambda_star if config.rhos else load
            sim = SimConfig(
                spec=ArrivalSpec(lam, dist),
                policy=policy.name,
                grid=policy.grid,
                n_jobs=config.jobs,
                seed=config.seed + index,
                max_queue=config.max_queue,
                max_mrt=config.max_mrt,
                warmup=config.warmup,
                theta=config.theta,
                epsilon=config.epsilon,
                backfill_order=config.backfill_order,
                use_lp=config.use_lp,
                trace=tuple(trace) if trace is not None else None,
            )
            load_value = lam / lambda_star if lambda_star else load
            rows.append(SweepRow(config=sim, load=load_value, load_is_rho=bool(lambda_star)))
    logger.info(f"Planned {len(rows)} runs: {len(config.policies)} policies x {len(loads)} loads")
    return rows


def results_frame(rows: Sequence[SweepRow], distribution: str) -> pd.DataFrame:
    """Result rows in input order; failed runs are unstable with an empty mean."""
    records = []
    for row in rows:
        sim = row.config
        result = row.result
        records.append({
            "policy": sim.policy,
            "distribution": distribution,
            "lambda": sim.spec.lam,
            "rho": row.rho if row.rho is not None else math.nan,
            "K": sim.grid.label() if sim.grid else "",
            "seed": sim.seed,
            "n_jobs": sim.n_jobs,
            "mean_response_time": result.mean_response_time if result else math.nan,
            "max_queue_len": result.max_queue_len if result else "",
            "unstable": "true" if result is None or result.unstable else "false",
        })
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def write_results(frame: pd.DataFrame, out: str) -> None:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g", na_rep="")


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {
        "DISTRIBUTION": getattr(args, "distribution", None),
        "POLICIES": getattr(args, "policies", None),
        "LAMBDAS": getattr(args, "lambdas", None),
        "RHOS": getattr(args, "rhos", None),
        "LAMBDA_STAR": getattr(args, "lambda_star", None),
        "K": getattr(args, "K", None),
        "JOBS": args.jobs,
        "SEED": args.seed,
        "WORKERS": args.workers,
        "OUT": args.out,
        "THETA": args.theta,
        "EPSILON": args.epsilon,
        "USE_LP": "true" if args.lp else None,
        "TRACE_PATH": getattr(args, "trace", None),
        "TRACE_COLUMN": getattr(args, "column", None),
        "MAX_ROWS": getattr(args, "max_rows", None),
        "QUANTILE": getattr(args, "quantile", None),
        "DROP_FRAC": getattr(args, "drop_frac", None),
    }
    return ExperimentConfig.load(args.config, overrides)


def _run_and_write(config: ExperimentConfig, rows: List[SweepRow], label: str, progress: bool) -> int:
    rows = run_rows(rows, workers=config.workers, progress=progress)
    frame = results_frame(rows, label)
    write_results(frame, config.out)

    failed = sum(1 for r in rows if r.error)
    unstable = sum(1 for r in rows if r.result is not None and r.result.unstable)
    print(f"Wrote {len(rows)} rows to '{config.out}' ({unstable} unstable, {failed} failed)")
    for row in rows:
        if row.error:
            print(f"  {row.config.policy} @ lambda={row.config.spec.lam:g}: {row.error}", file=sys.stderr)
    return 0


# =============================================================================
# Commands
# =============================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    """
    Run every configured policy at every load and write the results CSV.

    Args:
        args: Parsed command-line arguments

    Returns:
        int: Exit code (0 for success, 1 for errors, 2 for invalid config)
    """
    try:
        config = _load_config(args)
    except (FileNotFoundError, ConfigError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2

    is_valid, error = validate_experiment_config(config)
    if not is_valid:
        print(f"Error: invalid config: {error}", file=sys.stderr)
        return 2

    try:
        dist = config.dist()
        rows = plan_rows(config, dist)
    except MRJError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2

    print(f"Running {len(rows)} simulations ({config.jobs} jobs each, {dist.describe()})...")
    return _run_and_write(config, rows, dist.describe(), args.progress)


def cmd_trace(args: argparse.Namespace) -> int:
    """
    Normalize a trace column and run the configured policies on it.

    Returns:
        int: Exit code
    """
    try:
        config = _load_config(args)
    except (FileNotFoundError, ConfigError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2

    if config.trace is None:
        print("Error: invalid config: TRACE_PATH: a trace file is required", file=sys.stderr)
        return 2
    is_valid, error = validate_experiment_config(config)
    if not is_valid:
        print(f"Error: invalid config: {error}", file=sys.stderr)
        return 2

    try:
        loader = TraceLoader(config.trace)
        loader.load()
        normalized, scale = loader.normalize()
    except (FileNotFoundError, MRJError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print(f"Normalized by {scale:g}: {loader.audit_line()}")
    if args.dump_normalized:
        loader.export_normalized(args.dump_normalized)
        print(f"Wrote normalized values to '{args.dump_normalized}'")

    try:
        rows = plan_rows(config, loader.distribution(), normalized)
    except MRJError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    return _run_and_write(config, rows, config.trace.label, args.progress)


def cmd_dominance(args: argparse.Namespace) -> int:
    """
    Print the dominance report of a constructed or LP-optimal service mix.

    Returns:
        int: 0 iff delta > 0
    """
    try:
        dist = parse_distribution(args.distribution)
        grid = Grid.parse(args.K)
        rates = RateVector.from_spec(ArrivalSpec(args.lam, dist), grid)
        set_name = args.set.lower()

        if args.lp or set_name not in ("2j", "2b"):
            candidates = build_candidates(grid, set_name)
            delta, mix = max_dominance_lp(rates, candidates)
            method = f"LP over {len(candidates)} options"
        elif set_name == "2j":
            mix = construct_beta_2J(rates, grid, args.epsilon)
            delta = check_dominance(mix, rates).delta
            method = "2-Job construction"
        else:
            K = grid.K[0]
            masses = rates.rates / rates.total
            mix = construct_beta_2B(masses, args.lam, args.epsilon, mean_v=dist.mean()[0])
            delta = check_dominance(mix, rates).delta
            method = f"2-Bucket construction (K={K})"
    except (ValueError, MRJError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    report = check_dominance(mix, rates)
    if args.csv:
        print(report.to_csv(), end="")
    else:
        print(f"{method}: {len(mix)} options, total mass {mix.total_mass:.6f}")
        print(report.to_frame().to_string(index=False))
    print(f"delta = {delta:.6g}")
    return 0 if delta > 0 else 1


def _is_uniform(dist: RequirementDist) -> bool:
    if isinstance(dist, Uniform):
        return True
    return isinstance(dist, Product) and all(isinstance(c, Uniform) for c in dist.components)


def cmd_select_k(args: argparse.Namespace) -> int:
    """
    Print the discretization level the stability theorems recommend.

    Returns:
        int: Exit code
    """
    try:
        dist = parse_distribution(args.distribution)
        if args.family == "2b":
            K = select_K_2B(args.lam, dist.mean()[0])
        elif dist.d == 1 or _is_uniform(dist):
            K = select_K_2J(args.lam, dist.d, uniform=True)
        else:
            C = dist.lipschitz_constant()
            if C is None:
                raise ConfigError("DISTRIBUTION", f"{dist.describe()} has no known Lipschitz constant")
            K = select_K_2J_lipschitz(args.lam, dist.d, C, dist.sup_density(), args.epsilon)
    except (ValueError, MRJError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print(K)
    return 0


def cmd_enumerate(args: argparse.Namespace) -> int:
    """
    Print a candidate set, one option per line.

    Returns:
        int: Exit code
    """
    try:
        candidates = build_candidates(Grid.parse(args.K), args.set, cap=args.cap)
    except (ValueError, MRJError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    if args.count:
        print(len(candidates))
    else:
        print(candidates.to_text(), end="")
    return 0


# =============================================================================
# Argument parsing
# =============================================================================

def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="KEY=VALUE experiment file")
    parser.add_argument("--policies", type=str, help="Policies, e.g. 'lsf 2j-emw-b@65'")
    parser.add_argument("--lambdas", type=str, help="Arrival rates, e.g. '1.0 1.4'")
    parser.add_argument("--rhos", type=str, help="Loads rho = lambda / lambda*")
    parser.add_argument("--lambda-star", type=float, help="Stability boundary for --rhos")
    parser.add_argument("--K", type=str, help="Default discretization, e.g. 64 or 3x3")
    parser.add_argument("--seed", type=int, help="Base seed (default: 0)")
    parser.add_argument("--jobs", type=int, help="Arrivals per run (default: 1000000)")
    parser.add_argument("--workers", type=int, help="Parallel worker processes (default: 1)")
    parser.add_argument("--out", type=str, help="Results CSV (default: results.csv)")
    parser.add_argument("--theta", type=float, help="nMSR switch rate (default: 0.1)")
    parser.add_argument("--epsilon", type=float, help="Construction margin (default: 0.001)")
    parser.add_argument("--lp", action="store_true", help="Precompute nMSR mixes with the LP")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrj-lab",
        description="MRJ Lab - multiresource-job scheduling simulator and stability lab",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: WARNING)",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    simulate_parser = subparsers.add_parser("simulate", help="Sweep policies over loads")
    _add_run_arguments(simulate_parser)
    simulate_parser.add_argument("--distribution", type=str, help="Requirement distribution, e.g. 'uniform'")
    simulate_parser.set_defaults(func=cmd_simulate)

    trace_parser = subparsers.add_parser("trace", help="Sweep policies over a normalized trace")
    _add_run_arguments(trace_parser)
    trace_parser.add_argument("--trace", type=str, help="Trace file (comma or whitespace separated)")
    trace_parser.add_argument("--column", type=str, help="Column name or 0-based index")
    trace_parser.add_argument("--max-rows", type=int, help="Rows read at most (default: 1000000)")
    trace_parser.add_argument("--quantile", type=float, help="Normalization quantile (default: 1 - drop fraction)")
    trace_parser.add_argument("--drop-frac", type=float, help="Share of largest values dropped (default: 0.1)")
    trace_parser.add_argument("--dump-normalized", type=str, help="Write normalized values here")
    trace_parser.set_defaults(func=cmd_trace)

    dominance_parser = subparsers.add_parser("dominance", help="Check dominance of a service mix")
    dominance_parser.add_argument("--distribution", type=str, default="uniform")
    dominance_parser.add_argument("--lam", type=float, required=True, help="Arrival rate")
    dominance_parser.add_argument("--K", type=str, required=True, help="Discretization, e.g. 5 or 3x3")
    dominance_parser.add_argument(
        "--set", type=str, default="2j", choices=["full", "2j", "2b", "xp", "exact"], help="Candidate set"
    )
    dominance_parser.add_argument("--lp", action="store_true", help="Solve the max-margin LP instead of constructing")
    dominance_parser.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    dominance_parser.add_argument("--csv", action="store_true", help="Print the table as CSV")
    dominance_parser.set_defaults(func=cmd_dominance)

    select_parser = subparsers.add_parser("select-k", help="Recommended K for 2-Bucket or 2-Job policies")
    select_parser.add_argument("--distribution", type=str, default="uniform")
    select_parser.add_argument("--lam", type=float, required=True, help="Arrival rate")
    select_parser.add_argument("--family", type=str, choices=["2b", "2j"], required=True)
    select_parser.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    select_parser.set_defaults(func=cmd_select_k)

    enumerate_parser = subparsers.add_parser("enumerate", help="Print a candidate set")
    enumerate_parser.add_argument("--K", type=str, required=True, help="Discretization, e.g. 8 or 3x3")
    enumerate_parser.add_argument(
        "--set", type=str, default="full", choices=["full", "2j", "2b", "xp", "exact"], help="Candidate set"
    )
    enumerate_parser.add_argument("--cap", type=int, default=10_000_000, help="Enumeration cap")
    enumerate_parser.add_argument("--count", action="store_true", help="Print only the set size")
    enumerate_parser.set_defaults(func=cmd_enumerate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main CLI entry point for MRJ Lab.

    Returns:
        int: Exit code (0 for success, non-zero for error)
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

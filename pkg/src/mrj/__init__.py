"""
MRJ Package

This package contains the multiresource-job queueing model: requirement
distributions, discretization and candidate sets, scheduling policies and
the simulation engine. Policies and the engine are imported from their
modules directly (src.mrj.policies, src.mrj.engine).
"""

__version__ = "0.1.0"

# Core data models
from src.mrj.models import (
    CandidateSet,
    Grid,
    Job,
    Provenance,
    Schedule,
    ServiceOption,
    SimResult,
    validate_sim_result,
)

# Errors
from src.mrj.errors import (
    ConfigError,
    MRJError,
    TraceError,
)

# Requirement distributions
from src.mrj.requirements import (
    ArrivalSpec,
    RequirementDist,
    parse_distribution,
)

# Discretization
from src.mrj.discretization import (
    build_candidates,
    efficient_set_2B,
    efficient_set_2J,
    efficient_set_XP,
    enumerate_candidates,
    job_type,
)

__all__ = [
    # Version
    "__version__",
    # Models
    "CandidateSet",
    "Grid",
    "Job",
    "Provenance",
    "Schedule",
    "ServiceOption",
    "SimResult",
    "validate_sim_result",
    # Errors
    "ConfigError",
    "MRJError",
    "TraceError",
    # Requirements
    "ArrivalSpec",
    "RequirementDist",
    "parse_distribution",
    # Discretization
    "build_candidates",
    "efficient_set_2B",
    "efficient_set_2J",
    "efficient_set_XP",
    "enumerate_candidates",
    "job_type",
]

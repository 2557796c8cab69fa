"""
Stability Lab Package

Executable stability math: K selection, load against the stability
boundary, service-mix constructions and the dominance LP.
"""

from src.lab.calculations import (
    lipschitz_sup_bound,
    mmc_mean_response_time,
    select_K_2B,
    select_K_2J,
    select_K_2J_lipschitz,
    stability_load,
)
from src.lab.dominance import (
    DominanceReport,
    RateVector,
    ServiceMix,
    arrival_rate_vector,
    check_dominance,
    construct_beta_2B,
    construct_beta_2J,
    max_dominance_lp,
    service_measure,
)

__all__ = [
    "lipschitz_sup_bound",
    "mmc_mean_response_time",
    "select_K_2B",
    "select_K_2J",
    "select_K_2J_lipschitz",
    "stability_load",
    "DominanceReport",
    "RateVector",
    "ServiceMix",
    "arrival_rate_vector",
    "check_dominance",
    "construct_beta_2B",
    "construct_beta_2J",
    "max_dominance_lp",
    "service_measure",
]

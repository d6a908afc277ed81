"""Simulation checks of the identities in law, one ``verify_*`` per identity."""

from .catalog import (bridge_normalization, bridge_sample, bridge_weights, gamma_ratio_rhs, lamperti_rhs,
                      theorem2_rhs, verify_corollary1, verify_levy_exponent, verify_levy_limit,
                      verify_linnik_laplace, verify_prop_marginals, verify_section4,
                      verify_theorem2)
from .engine import (BATTERY_VERSION, LEVEL, ConfigurationError, compare_estimates, holm,
                     ks_critical, lt_band, weighted_ks, weighted_ks_report)

__all__ = [
    "BATTERY_VERSION", "LEVEL", "ConfigurationError", "bridge_normalization", "bridge_sample",
    "bridge_weights", "compare_estimates", "gamma_ratio_rhs", "lamperti_rhs", "holm", "ks_critical",
    "lt_band", "theorem2_rhs", "verify_corollary1", "verify_levy_exponent",
    "verify_levy_limit", "verify_linnik_laplace", "verify_prop_marginals", "verify_section4",
    "verify_theorem2", "weighted_ks", "weighted_ks_report",
]

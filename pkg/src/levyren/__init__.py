"""Renormalization of polynomial densities over infinitely divisible reference fields."""
from .reference import CauchyFamily, GammaFamily, GaussianFamily, make_family, verify_compatibility
from .condexp import cond_exp_power, r_matrix, r_ratio
from .wick import wick_by_subtraction, wick_closed_form
from .kinetic import cond_exp_t_app, t_app, t_ren_gamma, t_ren_gaussian
from .graphs import MultiGraph, chi, chi_connected, lagrangian_cumulant
from .effective import bouquet_sum, divergence_scan, mass_coefficient_limit, partition_numbers, power_count

__version__ = "0.1.0"

__all__ = [
    "CauchyFamily", "GammaFamily", "GaussianFamily", "make_family", "verify_compatibility",
    "cond_exp_power", "r_matrix", "r_ratio", "wick_by_subtraction", "wick_closed_form",
    "cond_exp_t_app", "t_app", "t_ren_gamma", "t_ren_gaussian", "MultiGraph", "chi",
    "chi_connected", "lagrangian_cumulant", "bouquet_sum", "divergence_scan",
    "mass_coefficient_limit", "partition_numbers", "power_count",
]

"""Empirical verification of the capacity inequalities, with constant estimation."""

from .checks import (WienerCase, check_annulus_bound, check_ball_bounds, check_capacity_comparison,
                     check_choquet, check_nested_domain_sum, check_outer_measure,
                     check_thinness_stability, check_wiener_equivalence, default_domain,
                     sphere_measure, thinness_battery, wiener_battery)
from .constants import ConstantEstimates, estimate_constants, mask_diameter
from .report import CheckReport, InstanceRow

__all__ = [
    "CheckReport", "InstanceRow", "ConstantEstimates", "WienerCase", "estimate_constants",
    "mask_diameter", "check_outer_measure", "check_choquet", "check_ball_bounds",
    "check_annulus_bound", "check_capacity_comparison", "check_nested_domain_sum",
    "check_wiener_equivalence", "check_thinness_stability", "default_domain",
    "sphere_measure", "wiener_battery", "thinness_battery",
]

"""Weighted variable-exponent capacities on uniform grids."""

__version__ = "0.1.0"

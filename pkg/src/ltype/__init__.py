"""Exact computations with L-type domains of quadratic forms."""

__version__ = "0.1.0"

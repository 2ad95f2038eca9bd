"""Finite-dimensional engine for r-Nambu-Poisson structures."""

__version__ = "0.1.0"

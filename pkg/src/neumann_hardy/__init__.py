"""Numerical harmonic analysis for the Neumann Laplacian on R^n (n = 1, 2)."""

__version__ = "0.1.0"

"""Finite-volume gradient reconstruction schemes and convergence studies."""

__version__ = "0.1.0"

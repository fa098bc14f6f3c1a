"""Numerical obstructions to integrability for nearly integrable systems."""

__version__ = "0.1.0"

"""Numerical laboratory for ideal-fluid geometry."""

__version__ = "0.1.0"

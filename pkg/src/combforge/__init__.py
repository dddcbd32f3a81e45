"""Numerical toolkit for quantum strategy operators."""

__version__ = "0.1.0"

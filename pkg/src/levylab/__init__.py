"""Numerical laboratory for SDEs driven by symmetric alpha-stable noise."""

__version__ = "0.1.0"

"""Intermittently nonlinear filtering of outlier noise."""

__version__ = "0.1.0"

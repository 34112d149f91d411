"""Degree-preserving edge rewiring for network resilience: metrics, search baselines and a learned policy."""

__version__ = "0.1.0"

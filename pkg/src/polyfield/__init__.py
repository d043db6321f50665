"""Samplers and diagnostics for non-homogeneous polygonal Markov fields."""

__version__ = "0.1.0"

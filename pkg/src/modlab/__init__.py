"""Numerical time-frequency laboratory for dyadic pseudo-differential counterexamples."""

__version__ = "0.1.0"

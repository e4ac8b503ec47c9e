"""Goodness-of-fit diagnostics for Bayesian models via posterior-draw chi-square statistics."""

__version__ = "0.1.0"

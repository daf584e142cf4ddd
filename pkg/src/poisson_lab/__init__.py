"""Poisson suspensions of infinite-measure Markov systems: entropy computations and simulation."""

__version__ = "0.1.0"

"""Spectral upper bounds on influence in random graphs, with Monte Carlo checks."""

__version__ = "0.1.0"

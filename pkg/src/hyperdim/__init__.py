"""Separated/spanning-set combinatorics and explosion constructions for
induced hyperspace maps of one-dimensional systems."""

__version__ = "0.1.0"

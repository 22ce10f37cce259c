"""Correlation dynamics of one-dimensional chains with topological nearest-neighbour interaction."""

__version__ = "0.1.0"

"""Spectral laboratory for one-dimensional point interactions"""

__version__ = "1.0.0"

"""Moments of the boundary hitting length from the orthospectrum."""

__version__ = "0.1.0"

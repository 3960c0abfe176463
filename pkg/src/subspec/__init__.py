"""Discreteness of the spectrum of sub-Laplacian Schrödinger operators on nilpotent groups."""

__version__ = "0.1.0"

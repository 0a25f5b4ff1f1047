"""Variational quantum solver for periodic Schrodinger eigenproblems on Fourier grids."""

__version__ = "0.1.0"

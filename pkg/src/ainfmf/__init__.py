"""Exact rational construction of minimal A-infinity models for matrix
factorisation categories of isolated hypersurface singularities."""

__version__ = "0.1.0"

"""Lattice surgery for qudit Kitaev models and its ZX-calculus description."""

__version__ = "0.1.0"

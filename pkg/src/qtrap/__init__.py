"""Exact quantum dynamics of a particle in a cylindrical trap whose circular
wall moves with uniform radial speed."""

__version__ = "0.1.0"

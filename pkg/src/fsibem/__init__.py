"""Galerkin boundary element solver for 2D fluid-solid interaction scattering."""

__version__ = "0.1.0"

"""Spectral semi-Galerkin simulator for the coupled Cahn-Hilliard-Biot system."""

__version__ = "0.1.0"

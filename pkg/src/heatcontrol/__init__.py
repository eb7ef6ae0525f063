"""Simulation, control synthesis and obstruction certificates for the 1-D heat equation."""

__version__ = "0.1.0"

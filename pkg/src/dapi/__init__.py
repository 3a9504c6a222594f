"""Simulation and certification tools for distributed-averaging PI frequency control."""

__version__ = "0.1.0"

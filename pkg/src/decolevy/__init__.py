"""Simulation and verification tools for decorated stable Levy limits."""

__version__ = "0.1.0"

"""Continuously tempered Langevin dynamics with metadynamics, plus baselines."""

__version__ = "0.1.0"

"""Swarm motion planning from spatio-temporal logic specifications."""

__version__ = "0.1.0"

"""Desk-scale clustered federated learning with nonparametric Bayesian
client clustering."""

__version__ = "0.1.0"

from .backends import ACTIVE_BACKEND

__all__ = ["ACTIVE_BACKEND", "__version__"]

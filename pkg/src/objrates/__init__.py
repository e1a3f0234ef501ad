"""Objective stress rates as covariant derivatives on the manifold of metrics."""

__version__ = "0.1.0"

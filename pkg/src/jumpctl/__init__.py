"""Hierarchical jumping controller for a quadruped on a centroidal model."""

__version__ = "0.1.0"

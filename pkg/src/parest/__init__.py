"""Rigid-body parameter estimation with parametrized shooting and Riccati solvers."""

__version__ = "0.1.0"

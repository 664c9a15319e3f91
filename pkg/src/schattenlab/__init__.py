"""Numerical laboratory for operator Lipschitz estimates in Schatten ideals."""

__version__ = "0.1.0"

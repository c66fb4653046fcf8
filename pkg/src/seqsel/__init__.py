"""Sequence-selection capacity lower bounds for nonlinear optical fiber channels."""

__version__ = "0.1.0"

"""Numerical toolkit for rational and elliptic Gaudin/Hitchin systems."""

from .theta import PoleError, ThetaContext, ThetaError, TruncationError

__all__ = ["ThetaContext", "ThetaError", "PoleError", "TruncationError"]

__version__ = "0.1.0"

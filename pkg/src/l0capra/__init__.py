"""Capra conjugacy tools for the l0 pseudonorm and its convex extension."""

from . import conjugacy, hidden_convexity, l0, norms, xreal

__version__ = "0.1.0"

__all__ = ["xreal", "norms", "conjugacy", "l0", "hidden_convexity", "__version__"]

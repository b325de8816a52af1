"""Scaled Polarity - scaled polarity and gauge transforms of geometric convex functions."""

__version__ = "0.1.0"

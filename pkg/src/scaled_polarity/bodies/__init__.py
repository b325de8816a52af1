"""Convex bodies K with the origin in their interior."""

from .ball import Ball, Ellipsoid, unit_ball
from .base import ConvexBody, ball_volume, mahler_volume
from .box import Box
from .factory import SUPPORTED_SHAPES, get_body
from .polytope import HPolytope, Polytope, Simplex, VPolytope, random_vpolytope

__all__ = [
    "Ball",
    "Box",
    "ConvexBody",
    "Ellipsoid",
    "HPolytope",
    "Polytope",
    "SUPPORTED_SHAPES",
    "Simplex",
    "VPolytope",
    "ball_volume",
    "get_body",
    "mahler_volume",
    "random_vpolytope",
    "unit_ball",
]

"""Convex body factory.

Creates the appropriate body from a JSON descriptor.
"""

from typing import TYPE_CHECKING, Any

import numpy as np

from ..errors import InvalidBodyError

if TYPE_CHECKING:
    from .base import ConvexBody

SUPPORTED_SHAPES = ["ball", "ellipsoid", "box", "hpolytope", "vpolytope", "simplex", "random_vpolytope"]


def _field(descriptor: dict[str, Any], name: str) -> Any:
    try:
        return descriptor[name]
    except KeyError:
        raise InvalidBodyError(f"Body descriptor of type '{descriptor.get('type')}' needs '{name}'")


def get_body(descriptor: dict[str, Any]) -> "ConvexBody":
    """
    Build a convex body from its descriptor.

    Args:
        descriptor: Mapping with a "type" key, e.g. {"type": "box", "half_widths": [1, 1]}
            or {"type": "vpolytope", "vertices": [[-1], [3]]}

    Returns:
        ConvexBody instance

    Raises:
        InvalidBodyError: If the shape is not supported or a field is missing
    """
    if not isinstance(descriptor, dict) or "type" not in descriptor:
        raise InvalidBodyError(f"Body descriptor must be an object with a 'type', got {descriptor!r}")
    shape = str(descriptor["type"]).lower()

    if shape == "ball":
        from .ball import Ball
        return Ball(int(_field(descriptor, "dim")), float(descriptor.get("radius", 1.0)))
    elif shape == "ellipsoid":
        from .ball import Ellipsoid
        return Ellipsoid(_field(descriptor, "matrix"))
    elif shape == "box" or shape == "cube":
        from .box import Box
        if "half_widths" not in descriptor and "dim" in descriptor:
            return Box(np.ones(int(descriptor["dim"])))
        return Box(_field(descriptor, "half_widths"))
    elif shape == "hpolytope":
        from .polytope import HPolytope
        return HPolytope(_field(descriptor, "normals"), _field(descriptor, "offsets"))
    elif shape == "vpolytope":
        from .polytope import VPolytope
        return VPolytope(_field(descriptor, "vertices"))
    elif shape == "simplex":
        from .polytope import Simplex
        return Simplex(_field(descriptor, "vertices"), bool(descriptor.get("centered", False)))
    elif shape == "random_vpolytope":
        from .polytope import random_vpolytope
        rng = np.random.default_rng(int(descriptor.get("seed", 0)))
        return random_vpolytope(int(_field(descriptor, "dim")), rng)
    else:
        raise InvalidBodyError(f"Unsupported body type: {shape}. Supported types: {SUPPORTED_SHAPES}")

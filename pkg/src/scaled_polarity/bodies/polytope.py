"""Polytopes in vertex and halfspace representation.

Every polytope keeps both representations: a sorted, deduplicated vertex
array and facet inequalities normals @ x <= offsets. The polar swaps them,
conv(V)° = {y : V @ y <= 1}.
"""

import logging
import math
from typing import Any

import numpy as np

from ..errors import InvalidBodyError, OriginNotInteriorError, UnboundedBodyError
from ._hull import (
    cone_decomposition,
    halfspace_vertices,
    hull_facets,
    hull_vertices,
    origin_is_interior,
    sort_rows,
)
from .base import ConvexBody

logger = logging.getLogger(__name__)

# Facets with offsets below this pass through the origin.
BOUNDARY_TOL = 1e-12


def polytope_gauge(normals: np.ndarray, offsets: np.ndarray, x: np.ndarray) -> np.ndarray:
    """max_i <a_i, x> / b_i over facets, with b_i = 0 facets giving 0 or +inf."""
    proj = x @ normals.T
    through_origin = offsets <= BOUNDARY_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(through_origin, 0.0, proj / np.where(through_origin, 1.0, offsets))
    ratios = np.where(through_origin & (proj > BOUNDARY_TOL), np.inf, ratios)
    return np.maximum(ratios.max(axis=1), 0.0)


class Polytope(ConvexBody):
    """Shared implementation for polytopes given by their vertices."""

    def __init__(self, vertices, require_interior: bool = True):
        verts = hull_vertices(vertices)
        super().__init__(verts.shape[1])
        normals, offsets = hull_facets(verts)
        if np.any(offsets < -BOUNDARY_TOL):
            raise OriginNotInteriorError("The origin lies outside the polytope")
        if require_interior and not np.all(offsets > BOUNDARY_TOL):
            raise OriginNotInteriorError("The origin lies on the boundary of the polytope")
        self._vertices = verts
        self._normals = normals
        self._offsets = offsets

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices.copy()

    @property
    def facets(self) -> tuple[np.ndarray, np.ndarray]:
        return self._normals.copy(), self._offsets.copy()

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        return polytope_gauge(self._normals, self._offsets, x)

    def _support(self, y: np.ndarray) -> np.ndarray:
        return np.max(y @ self._vertices.T, axis=1)

    def polar(self) -> "HPolytope":
        if not np.all(self._offsets > BOUNDARY_TOL):
            raise UnboundedBodyError("Polar is unbounded: the origin is on the boundary")
        return HPolytope(self._vertices, np.ones(len(self._vertices)))

    def volume(self) -> float:
        volumes, _ = cone_decomposition(self._vertices)
        return float(volumes.sum())

    def centroid(self) -> np.ndarray:
        volumes, centroids = cone_decomposition(self._vertices)
        return volumes @ centroids / volumes.sum()

    def difference_body(self) -> "VPolytope":
        diffs = (self._vertices[:, None, :] - self._vertices[None, :, :]).reshape(-1, self.dim)
        return VPolytope(diffs)

    def scaled(self, factor: float) -> "VPolytope":
        return VPolytope(self._vertices * self._check_scale(factor))

    def reflected(self) -> "VPolytope":
        return VPolytope(-self._vertices)

    def canonical_key(self) -> tuple[str, np.ndarray]:
        return ("polytope", self._vertices)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "vpolytope", "vertices": self._vertices.tolist()}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, vertices={len(self._vertices)})"


class VPolytope(Polytope):
    """Convex hull of a vertex list with 0 strictly inside."""

    def __init__(self, vertices):
        super().__init__(vertices, require_interior=True)

    @property
    def shape(self) -> str:
        return "vpolytope"


class HPolytope(Polytope):
    """Intersection of halfspaces <a_i, x> <= b_i with every b_i > 0."""

    def __init__(self, normals, offsets):
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).reshape(-1)
        if a.shape[0] != b.shape[0]:
            raise InvalidBodyError(
                f"Got {a.shape[0]} normals but {b.shape[0]} offsets"
            )
        if np.any(b <= 0):
            raise OriginNotInteriorError("Every halfspace offset b_i must be positive")
        self._rows = sort_rows(a / b[:, None])
        super().__init__(halfspace_vertices(self._rows), require_interior=True)

    @property
    def shape(self) -> str:
        return "hpolytope"

    @property
    def rows(self) -> np.ndarray:
        """Normalized halfspaces a_i / b_i, so the body is {x : rows @ x <= 1}."""
        return self._rows.copy()

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(np.max(x @ self._rows.T, axis=1), 0.0)

    def polar(self) -> VPolytope:
        return VPolytope(self._rows)

    def reflected(self) -> "HPolytope":
        return HPolytope(-self._rows, np.ones(len(self._rows)))

    def scaled(self, factor: float) -> "HPolytope":
        c = self._check_scale(factor)
        return HPolytope(self._rows, np.full(len(self._rows), c))

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": "hpolytope",
            "normals": self._rows.tolist(),
            "offsets": [1.0] * len(self._rows),
        }


class Simplex(Polytope):
    """Simplex conv(v_0, ..., v_n).

    With centered=True the vertices are translated so the centroid sits at
    the origin. Otherwise the origin only has to belong to the simplex; if it
    lies on the boundary, gauge may be +inf and polar() raises.
    """

    def __init__(self, vertices, centered: bool = False):
        verts = np.atleast_2d(np.asarray(vertices, dtype=float))
        if verts.shape[0] != verts.shape[1] + 1:
            raise InvalidBodyError(
                f"A simplex in R^{verts.shape[1]} needs {verts.shape[1] + 1} vertices, "
                f"got {verts.shape[0]}"
            )
        if centered:
            verts = verts - verts.mean(axis=0)
        super().__init__(verts, require_interior=False)
        if len(self._vertices) != self.dim + 1:
            raise InvalidBodyError("Simplex vertices are affinely dependent")

    @property
    def shape(self) -> str:
        return "simplex"

    def volume(self) -> float:
        edges = self._vertices[1:] - self._vertices[0]
        return abs(float(np.linalg.det(edges))) / math.factorial(self.dim)

    def centroid(self) -> np.ndarray:
        return self._vertices.mean(axis=0)

    def scaled(self, factor: float) -> "Simplex":
        return Simplex(self._vertices * self._check_scale(factor))

    def reflected(self) -> "Simplex":
        return Simplex(-self._vertices)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "simplex", "vertices": self._vertices.tolist(), "centered": False}


def random_vpolytope(
    n: int,
    rng: np.random.Generator,
    num_vertices: int | None = None,
    shift: float = 0.15,
    max_tries: int = 100,
) -> VPolytope:
    """Random polytope with vertices on a shifted, radially jittered sphere.

    Directions are uniform on the sphere and radii uniform in [0.6, 1.4];
    the whole cloud is shifted by a random vector of norm at most `shift`.
    Draws are repeated until the origin is interior.
    """
    m = num_vertices or (2 if n == 1 else 2 * n + 4)
    for _ in range(max_tries):
        directions = rng.standard_normal((m, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        if n == 1:
            directions = np.array([[-1.0], [1.0]] * ((m + 1) // 2))[:m]
        radii = rng.uniform(0.6, 1.4, size=(m, 1))
        offset = rng.standard_normal(n)
        offset *= shift * rng.uniform() / max(np.linalg.norm(offset), 1e-12)
        points = directions * radii + offset
        if origin_is_interior(points, tol=1e-6):
            return VPolytope(points)
        logger.debug("random_vpolytope: origin not interior, redrawing")
    raise InvalidBodyError(f"Could not draw a polytope containing 0 after {max_tries} tries")

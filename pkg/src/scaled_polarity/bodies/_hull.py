"""Convex hull helpers shared by the polytope bodies.

All helpers accept point clouds of shape (m, n) and treat n = 1 separately,
since qhull needs at least two dimensions.
"""

import math

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from ..errors import InvalidBodyError, UnboundedBodyError

# Points closer than this are merged when canonicalizing vertex sets.
DEDUP_TOL = 1e-12


def _as_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidBodyError(f"Expected a non-empty (m, n) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidBodyError("Point coordinates must be finite")
    return pts


def _hull(pts: np.ndarray) -> ConvexHull:
    try:
        return ConvexHull(pts)
    except (QhullError, ValueError) as e:
        raise InvalidBodyError(f"Points do not span a full-dimensional body: {e}")


def sort_rows(pts: np.ndarray) -> np.ndarray:
    """Deduplicate rows within DEDUP_TOL and sort them lexicographically."""
    rounded = np.round(pts / DEDUP_TOL) * DEDUP_TOL
    _, idx = np.unique(rounded, axis=0, return_index=True)
    kept = pts[np.sort(idx)]
    order = np.lexsort(np.round(kept, 9).T[::-1])
    return kept[order]


def hull_vertices(points) -> np.ndarray:
    """Extreme points of conv(points), deduplicated and sorted."""
    pts = _as_points(points)
    if pts.shape[1] == 1:
        lo, hi = pts.min(), pts.max()
        if hi - lo <= DEDUP_TOL:
            raise InvalidBodyError("A 1-D body needs two distinct endpoints")
        return np.array([[lo], [hi]])
    hull = _hull(pts)
    return sort_rows(pts[hull.vertices])


def hull_facets(points) -> tuple[np.ndarray, np.ndarray]:
    """Facet normals and offsets with conv(points) = {x : normals @ x <= offsets}."""
    pts = _as_points(points)
    if pts.shape[1] == 1:
        lo, hi = pts.min(), pts.max()
        return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
    hull = _hull(pts)
    eq = sort_rows(hull.equations)
    return eq[:, :-1], -eq[:, -1]


def origin_is_interior(points, tol: float = 1e-12) -> bool:
    """True if 0 lies strictly inside conv(points)."""
    try:
        _, offsets = hull_facets(points)
    except InvalidBodyError:
        return False
    return bool(np.all(offsets > tol))


def cone_decomposition(points) -> tuple[np.ndarray, np.ndarray]:
    """Split conv(points) into simplices fanned from the vertex mean.

    Returns the simplex volumes and centroids; their sums give the exact
    volume and first moment of the polytope.
    """
    pts = _as_points(points)
    n = pts.shape[1]
    if n == 1:
        lo, hi = pts.min(), pts.max()
        return np.array([hi - lo]), np.array([[(lo + hi) / 2.0]])
    hull = _hull(pts)
    apex = pts[hull.vertices].mean(axis=0)
    simplices = pts[hull.simplices]
    volumes = np.abs(np.linalg.det(simplices - apex)) / math.factorial(n)
    centroids = (simplices.sum(axis=1) + apex) / (n + 1)
    return volumes, centroids


def halfspace_vertices(rows: np.ndarray) -> np.ndarray:
    """Vertices of {x : rows @ x <= 1}; rows must have 0 inside their hull."""
    n = rows.shape[1]
    if not origin_is_interior(rows):
        raise UnboundedBodyError("Halfspaces {<a_i, x> <= b_i} do not bound a body")
    if n == 1:
        a = rows[:, 0]
        return np.array([[np.max(1.0 / a[a < 0])], [np.min(1.0 / a[a > 0])]])
    halfspaces = np.hstack([rows, -np.ones((rows.shape[0], 1))])
    try:
        hs = HalfspaceIntersection(halfspaces, np.zeros(n))
    except (QhullError, ValueError) as e:
        raise UnboundedBodyError(f"Halfspace intersection failed: {e}")
    return hull_vertices(hs.intersections)

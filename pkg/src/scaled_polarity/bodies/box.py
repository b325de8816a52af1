"""Axis-parallel boxes centered at the origin."""

import itertools
from typing import Any

import numpy as np

from ..errors import InvalidBodyError
from .base import ConvexBody
from ._hull import sort_rows
from .polytope import VPolytope


class Box(ConvexBody):
    """Box prod_i [-w_i, w_i]."""

    def __init__(self, half_widths):
        w = np.atleast_1d(np.asarray(half_widths, dtype=float))
        if w.ndim != 1 or np.any(~(w > 0)) or not np.all(np.isfinite(w)):
            raise InvalidBodyError(f"Box half-widths must be positive, got {w}")
        super().__init__(w.shape[0])
        self._half_widths = w

    @property
    def shape(self) -> str:
        return "box"

    @property
    def half_widths(self) -> np.ndarray:
        return self._half_widths.copy()

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        return np.max(np.abs(x) / self._half_widths, axis=1)

    def _support(self, y: np.ndarray) -> np.ndarray:
        return np.abs(y) @ self._half_widths

    def polar(self) -> VPolytope:
        """Cross-polytope conv{±e_i / w_i}."""
        axes = np.diag(1.0 / self._half_widths)
        return VPolytope(np.vstack([axes, -axes]))

    def volume(self) -> float:
        return float(np.prod(2.0 * self._half_widths))

    def centroid(self) -> np.ndarray:
        return np.zeros(self.dim)

    def difference_body(self) -> "Box":
        return Box(2.0 * self._half_widths)

    def scaled(self, factor: float) -> "Box":
        return Box(self._half_widths * self._check_scale(factor))

    def reflected(self) -> "Box":
        return self

    def corners(self) -> np.ndarray:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return signs * self._half_widths

    def canonical_key(self) -> tuple[str, np.ndarray]:
        return ("polytope", sort_rows(self.corners()))

    def to_dict(self) -> dict[str, Any]:
        return {"type": "box", "half_widths": self._half_widths.tolist()}

"""Euclidean balls and ellipsoids."""

from typing import Any

import numpy as np

from ..errors import InvalidBodyError
from .base import ConvexBody, ball_volume


class Ellipsoid(ConvexBody):
    """Ellipsoid {x : x^T A x <= 1} for a positive-definite matrix A."""

    def __init__(self, matrix):
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidBodyError(f"Ellipsoid matrix must be square, got shape {a.shape}")
        super().__init__(a.shape[0])
        a = (a + a.T) / 2.0
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise InvalidBodyError("Ellipsoid matrix must be positive definite")
        self._matrix = a
        self._inverse = np.linalg.inv(a)

    @property
    def shape(self) -> str:
        return "ellipsoid"

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix.copy()

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", x, self._matrix, x), 0.0))

    def _support(self, y: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", y, self._inverse, y), 0.0))

    def polar(self) -> "Ellipsoid":
        return Ellipsoid(self._inverse)

    def volume(self) -> float:
        return ball_volume(self.dim) / float(np.sqrt(np.linalg.det(self._matrix)))

    def centroid(self) -> np.ndarray:
        return np.zeros(self.dim)

    def scaled(self, factor: float) -> "Ellipsoid":
        c = self._check_scale(factor)
        return Ellipsoid(self._matrix / c**2)

    def reflected(self) -> "Ellipsoid":
        return self

    def canonical_key(self) -> tuple[str, np.ndarray]:
        return ("ellipsoid", self._matrix)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "ellipsoid", "matrix": self._matrix.tolist()}


class Ball(ConvexBody):
    """Centered Euclidean ball of the given radius."""

    def __init__(self, dim: int, radius: float = 1.0):
        super().__init__(dim)
        if not (radius > 0 and np.isfinite(radius)):
            raise InvalidBodyError(f"Ball radius must be positive, got {radius}")
        self._radius = float(radius)

    @property
    def shape(self) -> str:
        return "ball"

    @property
    def radius(self) -> float:
        return self._radius

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x, axis=1) / self._radius

    def _support(self, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(y, axis=1) * self._radius

    def polar(self) -> "Ball":
        return Ball(self.dim, 1.0 / self._radius)

    def volume(self) -> float:
        return ball_volume(self.dim) * self._radius**self.dim

    def centroid(self) -> np.ndarray:
        return np.zeros(self.dim)

    def difference_body(self) -> "Ball":
        return Ball(self.dim, 2.0 * self._radius)

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.dim, self._radius * self._check_scale(factor))

    def reflected(self) -> "Ball":
        return self

    def canonical_key(self) -> tuple[str, np.ndarray]:
        # Keyed as the ellipsoid it is, so Ball(r) and Ellipsoid(I / r^2) compare equal.
        return ("ellipsoid", np.eye(self.dim) / self._radius**2)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "ball", "dim": self.dim, "radius": self._radius}


def unit_ball(n: int) -> Ball:
    """B_2^n."""
    return Ball(n, 1.0)

"""Base convex body interface.

Defines the abstract interface that all convex bodies K (compact, convex,
origin in the interior) must implement.
"""

import math
from abc import ABC, abstractmethod
from typing import Any

import numpy as np

from ..errors import DimensionMismatchError, InvalidBodyError, UnsupportedShapeError

# Bodies whose canonical data agree within this tolerance are the same body.
SAME_BODY_TOL = 1e-9


def ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball B_2^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


class ConvexBody(ABC):
    """Abstract base class for convex bodies in R^n.

    Bodies are immutable values. Vector arguments may be a single point of
    shape (n,) or a batch of shape (m, n); results follow the same shape.
    """

    def __init__(self, dim: int):
        if int(dim) != dim or dim < 1:
            raise InvalidBodyError(f"Dimension must be a positive integer, got {dim}")
        self._dim = int(dim)

    @property
    def dim(self) -> int:
        """Ambient dimension n."""
        return self._dim

    @property
    @abstractmethod
    def shape(self) -> str:
        """Return the shape variant identifier."""
        pass

    def _points(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=float)
        single = arr.ndim <= 1
        arr = arr.reshape(1, -1) if single else arr
        if arr.shape[-1] != self._dim:
            raise DimensionMismatchError(
                f"Expected vectors of dimension {self._dim}, got {arr.shape[-1]}"
            )
        return arr, single

    def gauge(self, x):
        """Minkowski functional ||x||_K = inf{t > 0 : x in tK}."""
        arr, single = self._points(x)
        values = self._gauge(arr)
        return float(values[0]) if single else values

    def support(self, y):
        """Support function h_K(y) = sup_{x in K} <x, y>."""
        arr, single = self._points(y)
        values = self._support(arr)
        return float(values[0]) if single else values

    @abstractmethod
    def _gauge(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _support(self, y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def polar(self) -> "ConvexBody":
        """Polar body K° = {y : <x, y> <= 1 for all x in K}."""
        pass

    @abstractmethod
    def volume(self) -> float:
        """Lebesgue volume Vol_n(K)."""
        pass

    @abstractmethod
    def centroid(self) -> np.ndarray:
        """Volume-normalized first moment of K."""
        pass

    def difference_body(self) -> "ConvexBody":
        """Minkowski difference K - K."""
        raise UnsupportedShapeError(f"difference_body is not available for {self.shape}")

    @abstractmethod
    def scaled(self, factor: float) -> "ConvexBody":
        """Homothetic copy factor * K (factor > 0)."""
        pass

    @abstractmethod
    def reflected(self) -> "ConvexBody":
        """Reflection -K."""
        pass

    @abstractmethod
    def canonical_key(self) -> tuple[str, np.ndarray]:
        """Representation-independent data used for equality tests."""
        pass

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """JSON body descriptor."""
        pass

    def same_body(self, other: "ConvexBody", tol: float = SAME_BODY_TOL) -> bool:
        """True if both bodies describe the same set (up to tol)."""
        if other.dim != self.dim:
            return False
        kind, data = self.canonical_key()
        other_kind, other_data = other.canonical_key()
        return (
            kind == other_kind
            and data.shape == other_data.shape
            and bool(np.allclose(data, other_data, rtol=0.0, atol=tol))
        )

    def is_symmetric(self, tol: float = SAME_BODY_TOL) -> bool:
        """True if K = -K."""
        return self.same_body(self.reflected(), tol)

    def _check_scale(self, factor: float) -> float:
        if not (factor > 0 and math.isfinite(factor)):
            raise InvalidBodyError(f"Scale factor must be positive and finite, got {factor}")
        return float(factor)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


def mahler_volume(body: ConvexBody) -> float:
    """Volume product Vol_n(K) * Vol_n(K°)."""
    return body.volume() * body.polar().volume()

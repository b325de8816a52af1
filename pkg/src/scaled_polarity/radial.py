"""Radial geometric convex functions phi(x) = u(||x||_K).

Every level set of phi is the homothetic copy rho_u(t) K, so integrals,
transforms and barycenters reduce to the 1-D profile calculus. Legendre and
polarity move the shape to the polar body; the gauge transforms keep it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .bodies import ConvexBody, VPolytope, ball_volume, get_body, random_vpolytope
from .errors import BodyMismatchError, DivergenceError, InvalidProfileError, PreconditionError
from .profiles import (
    Profile,
    RadiusFunction,
    exp_level_integral,
    invert_profile,
    transform_profile,
)

logger = logging.getLogger(__name__)

# Transforms that send K to its polar body.
POLAR_KINDS = ("legendre", "polarity")
BARYCENTER_TOL = 1e-9


@dataclass(frozen=True)
class RadialFunction:
    """phi(x) = u(||x||_K) for a body K and a geometric convex profile u."""

    body: ConvexBody
    profile: Profile

    @property
    def dim(self) -> int:
        return self.body.dim

    def __call__(self, x):
        return self.profile(self.body.gauge(x))

    def level_radius(self) -> RadiusFunction:
        """t -> rho_u(t), so that L_t(phi) = rho_u(t) K."""
        return invert_profile(self.profile)

    def is_integrable(self) -> bool:
        """True if 0 < int e^{-phi} < inf."""
        u = self.profile
        return not u.is_zero() and not (u.is_bounded and u.end == 0)

    def reflected(self) -> "RadialFunction":
        """x -> phi(-x)."""
        return RadialFunction(self.body.reflected(), self.profile)

    def to_dict(self) -> dict[str, Any]:
        return {"body": self.body.to_dict(), "profile": self.profile.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RadialFunction":
        """Parse {"body": {...}, "profile": {...}}; a missing profile means the norm."""
        profile = Profile.from_dict(data["profile"]) if "profile" in data else Profile.identity()
        return cls(get_body(data["body"]), profile)


@dataclass(frozen=True)
class DegenerateLevelSet:
    """Marker for a level set with empty interior (rho_u(t) = 0)."""

    t: float
    dim: int


def norm(body: ConvexBody) -> RadialFunction:
    """||.||_K."""
    return RadialFunction(body, Profile.identity())


def indicator(body: ConvexBody, radius: float = 1.0) -> RadialFunction:
    """Convex indicator of radius * K (0 inside, +inf outside)."""
    return RadialFunction(body, Profile.indicator(radius))


def make_psi(body: ConvexBody, r: float, t0: float) -> RadialFunction:
    """
    The capped norm family psi_{K,r,t0}.

    For r in (0, 1] this is max{||x||_K, (||x||_K - (1 - r) t0) / r}; for r = 0 it is
    ||.||_K restricted to t0 K. Its level radius is p_{r,t0}(t) = min{t, r t + (1 - r) t0}.

    Raises:
        InvalidProfileError: If r is outside [0, 1] or t0 <= 0
    """
    if not 0.0 <= r <= 1.0:
        raise InvalidProfileError(f"r must lie in [0, 1], got {r}")
    if not t0 > 0:
        raise InvalidProfileError(f"t0 must be positive, got {t0}")
    if r == 0:
        return RadialFunction(body, Profile([0.0, t0], [0.0, t0], None))
    return RadialFunction(body, Profile([0.0, t0], [0.0, t0], 1.0 / r))


def random_profile(rng: np.random.Generator) -> Profile:
    """Random convex PL profile with 3 to 8 breakpoints and sorted slopes."""
    m = int(rng.integers(3, 9))
    gaps = rng.uniform(0.1, 1.5, size=m - 1)
    slopes = np.sort(rng.uniform(0.0, 2.0, size=m - 1))
    if rng.uniform() < 0.3:
        slopes[0] = 0.0
    breakpoints = np.concatenate([[0.0], np.cumsum(gaps)])
    values = np.concatenate([[0.0], np.cumsum(gaps * slopes)])
    if rng.uniform() < 0.25:
        return Profile(breakpoints, values, None)
    return Profile(breakpoints, values, slopes[-1] + rng.uniform(0.05, 1.0))


def random_radial(n: int, rng: np.random.Generator, symmetric: bool = False) -> RadialFunction:
    """Random (K, u) with K a random V-polytope (symmetrized on request)."""
    body = random_vpolytope(n, rng)
    if symmetric:
        verts = body.vertices
        body = VPolytope(np.vstack([verts, -verts]))
    return RadialFunction(body, random_profile(rng))


def add(phi: RadialFunction, psi: RadialFunction) -> RadialFunction:
    """phi + psi for two functions on the same body."""
    _require_same_body(phi, psi)
    return RadialFunction(phi.body, phi.profile.add(psi.profile))


def scale(phi: RadialFunction, c: float) -> RadialFunction:
    """c * phi."""
    return RadialFunction(phi.body, phi.profile.scale_values(c))


def _require_same_body(phi: RadialFunction, psi: RadialFunction) -> None:
    if not phi.body.same_body(psi.body):
        raise BodyMismatchError(
            f"Functions live on different bodies ({phi.body.shape} vs {psi.body.shape}); "
            "use the grid backend for mixed pairs"
        )


def transform_radial(phi: RadialFunction, kind: str, alpha: float = 1.0) -> RadialFunction:
    """
    Exact transform of a radial function.

    Args:
        phi: Input function (K, u)
        kind: One of legendre, polarity, gauge_j, j_left, j_right
        alpha: Scaling parameter

    Returns:
        (K°, T u) for legendre and polarity, (K, T u) for the gauge transforms
    """
    out = transform_profile(phi.profile, kind, alpha)
    body = phi.body.polar() if kind.lower() in POLAR_KINDS else phi.body
    return RadialFunction(body, out)


def _level_integral(phi: RadialFunction, n: int | None = None, weight: str = "exp", alpha: float = 1.0) -> float:
    if not phi.is_integrable():
        raise DivergenceError("int e^{-phi} is not in (0, inf)")
    return exp_level_integral(phi.level_radius(), n or phi.dim, weight, alpha)


def integral_exp(phi: RadialFunction) -> float:
    """int e^{-phi} = Vol(K) * int_0^inf e^{-t} rho_u(t)^n dt."""
    return phi.body.volume() * _level_integral(phi)


def integral_exp_power(phi: RadialFunction, c: float) -> float:
    """int e^{-c phi}."""
    return integral_exp(scale(phi, c))


def santalo_ratio(phi: RadialFunction, alpha: float, side: str = "left") -> float:
    """
    Ratio int e^{-J_alpha phi} / int e^{-phi}; the body volume cancels.

    Args:
        phi: Integrable radial function
        alpha: Positive scaling parameter
        side: "left" for J^l_alpha = alpha J, "right" for x -> alpha (J phi)(x / alpha)
    """
    if not alpha > 0:
        raise InvalidProfileError(f"alpha must be positive, got {alpha}")
    ratio = _level_integral(phi, weight="jexp", alpha=alpha) / _level_integral(phi)
    if side == "left":
        return ratio
    if side == "right":
        return alpha**phi.dim * ratio
    raise InvalidProfileError(f"side must be 'left' or 'right', got {side!r}")


def barycenter(phi: RadialFunction) -> np.ndarray:
    """bar(e^{-phi}) = centroid(K) * int e^{-t} rho^{n+1} / int e^{-t} rho^n."""
    n = phi.dim
    moment = _level_integral(phi, n + 1) / _level_integral(phi, n)
    return phi.body.centroid() * moment


def mahler_product_A(phi: RadialFunction, alpha: float) -> float:
    """int e^{-phi} * int e^{-A_alpha phi}."""
    dual = transform_radial(phi, "polarity", alpha)
    return integral_exp(phi) * integral_exp(dual)


def legendre_product(phi: RadialFunction, tol: float = BARYCENTER_TOL) -> float:
    """
    int e^{-phi} * int e^{-L phi} for a centered function.

    Raises:
        PreconditionError: If bar(e^{-phi}) is farther than tol from 0
    """
    bar = barycenter(phi)
    if np.linalg.norm(bar) > tol:
        raise PreconditionError(f"Barycenter {bar.tolist()} is not at the origin")
    return integral_exp(phi) * integral_exp(transform_radial(phi, "legendre"))


def level_set(phi: RadialFunction, t: float) -> ConvexBody | DegenerateLevelSet:
    """L_t(phi) = rho_u(t) K, or a DegenerateLevelSet when rho_u(t) = 0."""
    if t < 0:
        raise InvalidProfileError(f"Level must be >= 0, got {t}")
    radius = float(phi.level_radius()(t))
    if radius <= 0:
        return DegenerateLevelSet(t=float(t), dim=phi.dim)
    return phi.body.scaled(radius)


def level_inclusion_slack(phi: RadialFunction, alpha: float, s: float, t: float) -> float:
    """
    Slack of L_s(A_alpha phi) within (s t / alpha + 1) (L_t phi)°.

    Both sides are multiples of K°, so the inclusion is
    rho_{A_alpha u}(s) <= (s t / alpha + 1) / rho_u(t); the returned slack is the
    right side minus the left side and is >= 0 exactly when the inclusion holds.
    """
    rho_t = float(phi.level_radius()(t))
    if rho_t == 0:
        return math.inf
    dual = transform_profile(phi.profile, "polarity", alpha)
    rho_s = math.inf if dual.is_zero() else float(invert_profile(dual)(s))
    return (s * t / alpha + 1.0) / rho_t - rho_s


def even_mahler_upper_bound(n: int, alpha: float) -> float:
    """Vol(B_2^n)^2 n! (1 / (n!)^{1/n} + (n!)^{1/n} / alpha)^n."""
    root = math.factorial(n) ** (1.0 / n)
    return ball_volume(n) ** 2 * math.factorial(n) * (1.0 / root + root / alpha) ** n

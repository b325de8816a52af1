"""Exact calculus of piecewise-linear geometric convex profiles.

A profile u: [0, inf) -> [0, inf] is convex, nondecreasing, vanishes at 0 and
is linear between breakpoints 0 = r_0 < ... < r_m. Beyond r_m it either
continues with a final slope or is +inf (the "bounded" marker). The class is
closed under the Legendre transform, the scaled polarity transform, the gauge
transform J and its two scalings, inf-convolution and g-inf-convolution, so
every transform here returns an exact Profile.

Level radii t -> sup{r : u(r) <= t} are concave piecewise-linear functions and
are carried by RadiusFunction.
"""

import logging
import math
from typing import Any

import numpy as np
from scipy.special import gammainc

from .errors import DivergenceError, InvalidProfileError

logger = logging.getLogger(__name__)

SUPPORTED_TRANSFORMS = ["legendre", "polarity", "gauge_j", "j_left", "j_right"]
SUPPORTED_WEIGHTS = ["exp", "jexp"]

# Relative tolerance for merging collinear segments and coincident breakpoints.
SLOPE_TOL = 1e-11
BREAK_TOL = 1e-13


def _rel_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _merge_points(
    points: list[tuple[float, float]], tail: float | None
) -> list[tuple[float, float]]:
    """Drop coincident breakpoints and interior points on a straight segment."""
    kept: list[tuple[float, float]] = []
    last = len(points) - 1
    for i, (r, v) in enumerate(points):
        if kept and r - kept[-1][0] <= BREAK_TOL * max(1.0, abs(r)):
            # keep the later point only when it closes a bounded domain
            if i == last and tail is None and len(kept) > 1:
                kept[-1] = (r, v)
            continue
        kept.append((r, v))
    stack: list[tuple[float, float]] = []
    for p in kept:
        while len(stack) >= 2 and _rel_close(
            _slope(stack[-2], stack[-1]), _slope(stack[-1], p), SLOPE_TOL
        ):
            stack.pop()
        stack.append(p)
    if tail is not None:
        while len(stack) >= 2 and _rel_close(_slope(stack[-2], stack[-1]), tail, SLOPE_TOL):
            stack.pop()
    return stack


def _slope(p: tuple[float, float], q: tuple[float, float]) -> float:
    return (q[1] - p[1]) / (q[0] - p[0])


class PiecewiseLinear:
    """Continuous piecewise-linear function on [0, inf) with an optional tail."""

    def __init__(self, breakpoints, values, tail_slope: float | None):
        r = np.atleast_1d(np.asarray(breakpoints, dtype=float))
        v = np.atleast_1d(np.asarray(values, dtype=float))
        if r.ndim != 1 or r.shape != v.shape or r.size == 0:
            raise InvalidProfileError(
                f"Breakpoints and values must be non-empty 1-D arrays of equal length, "
                f"got shapes {r.shape} and {v.shape}"
            )
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise InvalidProfileError("Breakpoints and values must be finite")
        if abs(r[0]) > BREAK_TOL:
            raise InvalidProfileError(f"The first breakpoint must be 0, got {r[0]}")
        if np.any(np.diff(r) < 0):
            raise InvalidProfileError("Breakpoints must be increasing")
        if tail_slope is not None:
            tail_slope = float(tail_slope)
            if not math.isfinite(tail_slope) or tail_slope < 0:
                raise InvalidProfileError(f"Tail slope must be finite and >= 0, got {tail_slope}")
        r[0] = 0.0
        merged = _merge_points(list(zip(r.tolist(), v.tolist())), tail_slope)
        self._breakpoints = np.array([p[0] for p in merged])
        self._values = np.array([p[1] for p in merged])
        self._tail = tail_slope

    @property
    def breakpoints(self) -> np.ndarray:
        return self._breakpoints.copy()

    @property
    def values(self) -> np.ndarray:
        return self._values.copy()

    @property
    def tail_slope(self) -> float | None:
        """Final slope, or None when the function is +inf beyond the last breakpoint."""
        return self._tail

    @property
    def is_bounded(self) -> bool:
        return self._tail is None

    @property
    def end(self) -> float:
        """Last breakpoint r_m."""
        return float(self._breakpoints[-1])

    @property
    def slopes(self) -> np.ndarray:
        """Segment slopes between consecutive breakpoints."""
        return np.diff(self._values) / np.diff(self._breakpoints)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise InvalidProfileError("Profiles are defined on [0, inf)")
        inside = np.interp(arr, self._breakpoints, self._values)
        beyond = arr > self.end
        if self._tail is None:
            out = np.where(beyond, np.inf, inside)
        else:
            with np.errstate(invalid="ignore"):
                tail = self._values[-1] + self._tail * (arr - self.end)
            tail = np.where(np.isinf(arr) & (self._tail == 0), self._values[-1], tail)
            out = np.where(beyond, tail, inside)
        return float(out) if out.ndim == 0 else out

    def tail_dict(self) -> dict[str, Any]:
        return {"bounded": True} if self._tail is None else {"slope": self._tail}

    def to_dict(self) -> dict[str, Any]:
        return {
            "breakpoints": self._breakpoints.tolist(),
            "values": self._values.tolist(),
            "tail": self.tail_dict(),
        }

    def same_as(self, other: "PiecewiseLinear", tol: float = 1e-12) -> bool:
        """Breakpoint-exact equality within relative tolerance tol."""
        if self._breakpoints.shape != other._breakpoints.shape:
            return False
        if (self._tail is None) != (other._tail is None):
            return False
        scale = np.maximum(1.0, np.abs(self._breakpoints))
        if np.any(np.abs(self._breakpoints - other._breakpoints) > tol * scale):
            return False
        scale = np.maximum(1.0, np.abs(self._values))
        if np.any(np.abs(self._values - other._values) > tol * scale):
            return False
        return self._tail is None or _rel_close(self._tail, other._tail, tol)

    def __repr__(self) -> str:
        tail = "bounded" if self._tail is None else f"slope={self._tail:g}"
        return f"{type(self).__name__}(breakpoints={self._breakpoints.tolist()}, values={self._values.tolist()}, {tail})"


class Profile(PiecewiseLinear):
    """Geometric convex profile u with u(0) = 0.

    The value stored at a bounded domain end is the limit of the last segment,
    which makes u lower semi-continuous there.
    """

    def __init__(self, breakpoints, values, tail_slope: float | None = None):
        super().__init__(breakpoints, values, tail_slope)
        tol = 1e-9 * max(1.0, float(np.max(np.abs(self._values))))
        if abs(self._values[0]) > tol:
            raise InvalidProfileError(f"Profiles vanish at 0, got u(0) = {self._values[0]}")
        self._values[0] = 0.0
        slopes = self.slopes
        if np.any(slopes < -tol):
            raise InvalidProfileError("Profile must be nondecreasing")
        self._values = np.maximum(self._values, 0.0)
        all_slopes = slopes if self._tail is None else np.append(slopes, self._tail)
        if np.any(np.diff(all_slopes) < -1e-9 * np.maximum(1.0, np.abs(all_slopes[1:]))):
            raise InvalidProfileError("Profile must be convex (nondecreasing slopes)")

    @classmethod
    def identity(cls) -> "Profile":
        """u(r) = r, the profile of a gauge ||.||_K."""
        return cls([0.0], [0.0], 1.0)

    @classmethod
    def zero(cls) -> "Profile":
        return cls([0.0], [0.0], 0.0)

    @classmethod
    def indicator(cls, radius: float = 1.0) -> "Profile":
        """0 on [0, radius], +inf beyond; radius 0 gives the indicator of {0}."""
        if radius < 0:
            raise InvalidProfileError(f"Indicator radius must be >= 0, got {radius}")
        if radius == 0:
            return cls([0.0], [0.0], None)
        return cls([0.0, radius], [0.0, 0.0], None)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Profile":
        """Parse {"breakpoints": [...], "values": [...], "tail": {"slope": s} | {"bounded": true}}."""
        try:
            tail = data.get("tail", {"bounded": True})
            slope = None if tail.get("bounded") else float(tail["slope"])
            return cls(data["breakpoints"], data["values"], slope)
        except (KeyError, TypeError, AttributeError) as e:
            raise InvalidProfileError(f"Malformed profile descriptor: {e}")

    @property
    def zero_end(self) -> float:
        """r_z = sup{r : u(r) = 0}; +inf for u = 0."""
        if self.is_zero():
            return math.inf
        positive = np.nonzero(self._values > 0)[0]
        if positive.size == 0:
            return self.end
        return float(self._breakpoints[positive[0] - 1])

    def is_zero(self) -> bool:
        return self._tail == 0.0 and not np.any(self._values > 0)

    def is_indicator(self) -> bool:
        return self._tail is None and not np.any(self._values > 0)

    def scale_values(self, c: float) -> "Profile":
        """c * u for c > 0."""
        if not c > 0:
            raise InvalidProfileError(f"Scale must be positive, got {c}")
        tail = None if self._tail is None else c * self._tail
        return Profile(self._breakpoints, c * self._values, tail)

    def scale_argument(self, c: float) -> "Profile":
        """r -> u(c r) for c > 0."""
        if not c > 0:
            raise InvalidProfileError(f"Scale must be positive, got {c}")
        tail = None if self._tail is None else c * self._tail
        return Profile(self._breakpoints / c, self._values, tail)

    def add(self, other: "Profile") -> "Profile":
        """Pointwise sum u + v."""
        ends = [p.end for p in (self, other) if p.is_bounded]
        end = min(ends) if ends else math.inf
        grid = np.union1d(self._breakpoints, other._breakpoints)
        grid = grid[grid <= end]
        if math.isfinite(end) and grid[-1] < end:
            grid = np.append(grid, end)
        tail = None if ends else self._tail + other._tail
        return Profile(grid, self(grid) + other(grid), tail)


class RadiusFunction(PiecewiseLinear):
    """Concave nondecreasing level radius t -> sup{r : u(r) <= t}.

    Always defined on all of [0, inf); rho(0) may be positive.
    """

    def __init__(self, breakpoints, values, tail_slope: float = 0.0):
        if tail_slope is None:
            raise InvalidProfileError("Radius functions are finite on [0, inf)")
        super().__init__(breakpoints, values, tail_slope)
        if self._values[0] < -1e-12:
            raise InvalidProfileError(f"rho(0) must be >= 0, got {self._values[0]}")
        self._values[0] = max(self._values[0], 0.0)
        all_slopes = np.append(self.slopes, self._tail)
        if np.any(all_slopes < -1e-12):
            raise InvalidProfileError("Radius function must be nondecreasing")
        if np.any(np.diff(all_slopes) > 1e-9 * np.maximum(1.0, np.abs(all_slopes[:-1]))):
            raise InvalidProfileError("Radius function must be concave (nonincreasing slopes)")

    @classmethod
    def identity(cls) -> "RadiusFunction":
        return cls([0.0], [0.0], 1.0)

    def perspective(self, alpha: float) -> "RadiusFunction":
        """t -> (t/alpha) rho(alpha/t), extended to t = 0 by its limit.

        A segment rho(w) = c + e w becomes (c/alpha) t + e, so the breakpoints
        move to alpha/t_j, the value at 0 is the tail slope of rho and the new
        tail slope is rho(0)/alpha.
        """
        if not alpha > 0:
            raise InvalidProfileError(f"alpha must be positive, got {alpha}")
        t = self._breakpoints[1:]
        new_t = alpha / t[::-1]
        new_v = (self._values[1:] / t)[::-1]
        return RadiusFunction(
            np.concatenate([[0.0], new_t]),
            np.concatenate([[self._tail], new_v]),
            self._values[0] / alpha,
        )


# -- level radii ----------------------------------------------------------------


def invert_profile(u: Profile) -> RadiusFunction:
    """Generalized inverse rho(t) = sup{r : u(r) <= t}.

    Raises:
        InvalidProfileError: If u = 0 (every level set is unbounded)
    """
    if u.is_zero():
        raise InvalidProfileError("The zero profile has unbounded level sets")
    r, v = u.breakpoints, u.values
    z = int(np.nonzero(v > 0)[0][0]) - 1 if np.any(v > 0) else len(v) - 1
    tail = 0.0 if u.is_bounded else 1.0 / u.tail_slope
    return RadiusFunction(v[z:], r[z:], tail)


def radius_to_profile(rho: RadiusFunction) -> Profile:
    """Inverse of invert_profile: u(r) = inf{t : rho(t) >= r}."""
    t, r = rho.breakpoints, rho.values
    slopes = np.append(rho.slopes, rho.tail_slope)
    flat = np.nonzero(slopes <= 0)[0]
    last = int(flat[0]) if flat.size else None
    stop = len(t) if last is None else last + 1
    bps, vals = list(r[:stop]), list(t[:stop])
    if bps[0] > 0:
        bps.insert(0, 0.0)
        vals.insert(0, 0.0)
    tail = None if last is not None else 1.0 / rho.tail_slope
    return Profile(bps, vals, tail)


# -- transforms -----------------------------------------------------------------


def _envelope(slopes: np.ndarray, intercepts: np.ndarray, end: float) -> Profile:
    """Upper envelope of the lines a_k s + b_k on [0, end] as a Profile.

    The envelope must vanish at s = 0. A finite end bounds the result there.
    """
    if end <= 0:
        return Profile.indicator(0.0)
    order = np.lexsort((intercepts, slopes))
    lines: list[tuple[float, float]] = []
    for a, b in zip(slopes[order], intercepts[order]):
        if lines and lines[-1][0] == a:
            lines.pop()
        # l2 is redundant when l1 and l3 meet no later than l1 and l2
        while len(lines) >= 2:
            (a1, b1), (a2, b2) = lines[-2], lines[-1]
            if (b - b1) * (a2 - a1) >= (b2 - b1) * (a - a1):
                lines.pop()
            else:
                break
        lines.append((float(a), float(b)))
    xs = [(lines[i][1] - lines[i + 1][1]) / (lines[i + 1][0] - lines[i][0]) for i in range(len(lines) - 1)]
    start = next((i for i, x in enumerate(xs) if x > 0), len(lines) - 1)
    bps, vals = [0.0], [lines[start][1]]
    active = start
    for i in range(start, len(xs)):
        if xs[i] >= end:
            break
        bps.append(xs[i])
        vals.append(lines[i][0] * xs[i] + lines[i][1])
        active = i + 1
    if abs(vals[0]) > 1e-12:
        raise InvalidProfileError(f"Transform does not vanish at 0 (value {vals[0]})")
    vals[0] = 0.0
    if math.isfinite(end):
        a, b = lines[active]
        bps.append(end)
        vals.append(a * end + b)
        return Profile(bps, vals, None)
    return Profile(bps, vals, lines[active][0])


def legendre_profile(u: Profile) -> Profile:
    """(L u)(s) = sup_{r >= 0} (r s - u(r))."""
    end = math.inf if u.is_bounded else u.tail_slope
    return _envelope(u.breakpoints, -u.values, end)


def polarity_profile(u: Profile, alpha: float = 1.0) -> Profile:
    """alpha * sup_r (r s - 1) / u(r).

    Points with u(r) = 0 contribute 0 when r s <= 1 and +inf otherwise, so the
    result is +inf beyond 1/r_z; points with u(r) = +inf contribute 0.
    """
    if not alpha > 0:
        raise InvalidProfileError(f"Polarity needs alpha > 0, got {alpha}")
    r_z = u.zero_end
    if math.isinf(r_z):
        return Profile.indicator(0.0)
    r, v = u.breakpoints, u.values
    pos = v > 0
    slopes = np.concatenate([[0.0], r[pos] / v[pos]])
    intercepts = np.concatenate([[0.0], -1.0 / v[pos]])
    if not u.is_bounded:
        slopes = np.append(slopes, 1.0 / u.tail_slope)
        intercepts = np.append(intercepts, 0.0)
    end = math.inf if r_z == 0 else 1.0 / r_z
    out = _envelope(slopes, intercepts, end)
    return out if alpha == 1.0 else out.scale_values(alpha)


def gauge_j_profile(u: Profile) -> Profile:
    """J u, through the level radius identity rho_{Ju}(t) = t rho_u(1/t)."""
    if u.is_zero():
        return u
    return radius_to_profile(invert_profile(u).perspective(1.0))


def transform_profile(u: Profile, kind: str, alpha: float = 1.0) -> Profile:
    """
    Apply one of the exact profile transforms.

    Args:
        u: Input profile
        kind: One of legendre, polarity, gauge_j, j_left, j_right
        alpha: Scaling parameter for polarity, j_left and j_right

    Returns:
        Transformed Profile

    Raises:
        InvalidProfileError: If the kind is unknown or alpha <= 0
    """
    kind = kind.lower()
    if kind in ("polarity", "j_left", "j_right") and not alpha > 0:
        raise InvalidProfileError(f"{kind} needs alpha > 0, got {alpha}")
    if kind == "legendre":
        out = legendre_profile(u)
    elif kind == "polarity":
        out = polarity_profile(u, alpha)
    elif kind == "gauge_j":
        out = gauge_j_profile(u)
    elif kind == "j_left":
        out = gauge_j_profile(u).scale_values(alpha)
    elif kind == "j_right":
        j = gauge_j_profile(u)
        tail = j.tail_slope
        out = Profile(j.breakpoints * alpha, j.values * alpha, tail)
    else:
        raise InvalidProfileError(f"Unsupported transform: {kind}. Supported transforms: {SUPPORTED_TRANSFORMS}")
    logger.debug("%s(alpha=%g): %d -> %d breakpoints", kind, alpha, len(u.breakpoints), len(out.breakpoints))
    return out


# -- convolutions ---------------------------------------------------------------


def _segments(u: Profile) -> list[tuple[float, float]]:
    segs = list(zip(np.diff(u.breakpoints).tolist(), u.slopes.tolist()))
    if not u.is_bounded:
        segs.append((math.inf, u.tail_slope))
    return segs


def inf_conv_profile(u: Profile, v: Profile) -> Profile:
    """inf_{a + b = r} u(a) + v(b), by merging segments in slope order."""
    segs = sorted(_segments(u) + _segments(v), key=lambda s: s[1])
    bps, vals = [0.0], [0.0]
    for length, slope in segs:
        if math.isinf(length):
            return Profile(bps, vals, slope)
        bps.append(bps[-1] + length)
        vals.append(vals[-1] + slope * length)
    return Profile(bps, vals, None)


def g_inf_conv_profile(u: Profile, v: Profile) -> Profile:
    """g-inf-convolution J(Ju inf-conv Jv)."""
    return gauge_j_profile(inf_conv_profile(gauge_j_profile(u), gauge_j_profile(v)))


# -- integrals ------------------------------------------------------------------


def lower_gamma(k: int, x: float) -> float:
    """Lower incomplete gamma gamma(k, x) = int_0^x t^(k-1) e^(-t) dt; x may be inf."""
    if math.isinf(x):
        return math.gamma(k)
    return float(gammainc(k, x)) * math.gamma(k)


def _exp_moment(rho: RadiusFunction, n: int) -> float:
    """int_0^inf e^(-t) rho(t)^n dt, segment by segment."""
    t, r = rho.breakpoints, rho.values
    slopes = np.append(rho.slopes, rho.tail_slope)
    lengths = np.append(np.diff(t), math.inf)
    total = 0.0
    for t_j, r_j, d, length in zip(t, r, slopes, lengths):
        seg = sum(
            math.comb(n, k) * r_j ** (n - k) * d**k * lower_gamma(k + 1, length)
            for k in range(n + 1)
        )
        total += math.exp(-t_j) * seg
    return total


def exp_level_integral(rho: RadiusFunction, n: int, weight: str = "exp", alpha: float = 1.0) -> float:
    """
    Weighted level-volume integral of a radius function.

    "exp" gives int_0^inf e^(-t) rho(t)^n dt. "jexp" gives
    int_0^inf alpha e^(-alpha/z) z^(-(n+2)) rho(z)^n dz, which the substitution
    w = alpha/z turns into the "exp" integral of rho.perspective(alpha).

    Raises:
        DivergenceError: If the integral is zero or not finite
    """
    if n < 1 or int(n) != n:
        raise InvalidProfileError(f"Dimension must be a positive integer, got {n}")
    weight = weight.lower()
    if weight == "exp":
        value = _exp_moment(rho, int(n))
    elif weight == "jexp":
        value = _exp_moment(rho.perspective(alpha), int(n))
    else:
        raise InvalidProfileError(f"Unsupported weight: {weight}. Supported weights: {SUPPORTED_WEIGHTS}")
    if not math.isfinite(value) or value <= 0:
        raise DivergenceError(f"{weight} level integral is {value}")
    return value

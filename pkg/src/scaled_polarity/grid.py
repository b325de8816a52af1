"""Sampled convex functions on regular lattices in dimensions 1 to 3.

A GridFunction stores f on the lattice of a GridSpec, with np.inf for +inf.
The transforms here are numerical: the Legendre transform is a nested
per-axis discrete conjugate, the polarity transform a direct sup over the
finite lattice points and the gauge transform J is read off the epigraph map
F(x, z) = (x / z, 1 / z) as J f(y) = inf{s > 0 : s f(y / s) <= 1}.

Outside the lattice a function is extended affinely along rays from the
origin, with the slope read off the last lattice step before the boundary.
The extension is exact for norms and for functions that are linear near the
boundary, and a lower bound for every other geometric convex function.
"""

import csv
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import BodyMismatchError, GridRangeError, GridTooSmallError, InvalidProfileError

logger = logging.getLogger(__name__)

MAX_GRID_DIM = 3
DEFAULT_LEAK_TOL = 1e-4
LEAK_WARN = 1e-12
CONVEXITY_RTOL = 1e-6
# Stand-in for +inf inside interpolation; anything above INF_CUT reads as +inf.
BIG = 1e30
INF_CUT = 1e20
# J search: geometric ladder of scales J_SEARCH_MAX * 2^-k, then bisection in one rung.
J_SEARCH_MAX = 1e6
J_LADDER_STEPS = 64
J_BISECT_STEPS = 56
J_SLACK = 1e-9
# entries per (output rows x input points) block in the polarity sup
POLARITY_BLOCK = 1 << 23
EXTEND_FACTOR = 1.5

BINARY_MAGIC = b"CDLG"
BINARY_VERSION = 1
BINARY_INF = -1.0


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned lattice lo + h * k with the same step h on every axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    h: float

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not 1 <= len(self.lo) <= MAX_GRID_DIM:
            raise GridRangeError(f"Grids support dimensions 1 to {MAX_GRID_DIM}, got lo={self.lo}, hi={self.hi}")
        if not self.h > 0:
            raise GridRangeError(f"Grid step must be positive, got {self.h}")
        for lo, hi in zip(self.lo, self.hi):
            if not lo < 0 < hi:
                raise GridRangeError(f"Every axis range must contain 0 in its interior, got [{lo}, {hi}]")
            for end in (lo, hi):
                if abs(end / self.h - round(end / self.h)) > 1e-9:
                    raise GridRangeError(f"Axis end {end} is not a multiple of h = {self.h}")

    @classmethod
    def cube(cls, n: int, half_range: float = 8.0, h: float = 1.0 / 64) -> "GridSpec":
        """Lattice on [-half_range, half_range]^n."""
        return cls(tuple([-float(half_range)] * n), tuple([float(half_range)] * n), float(h))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(round((hi - lo) / self.h)) + 1 for lo, hi in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def is_symmetric(self) -> bool:
        return all(math.isclose(-lo, hi) for lo, hi in zip(self.lo, self.hi))

    def axes(self) -> list[np.ndarray]:
        return [lo + self.h * np.arange(count) for lo, count in zip(self.lo, self.shape)]

    def points(self) -> np.ndarray:
        """All lattice points, shape (size, dim), in row-major order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def origin_index(self) -> tuple[int, ...]:
        return tuple(int(round(-lo / self.h)) for lo in self.lo)

    def box_gauge(self, x: np.ndarray) -> np.ndarray:
        """Gauge of the lattice box, so x / box_gauge(x) lies on its boundary."""
        hi, lo = np.asarray(self.hi), np.asarray(self.lo)
        return np.max(np.where(x >= 0, x / hi, x / lo), axis=-1)

    def extended(self, factor: float = EXTEND_FACTOR) -> "GridSpec":
        hi = tuple(math.ceil(v * factor / self.h - 1e-9) * self.h for v in self.hi)
        lo = tuple(-math.ceil(-v * factor / self.h - 1e-9) * self.h for v in self.lo)
        return GridSpec(lo, hi, self.h)

    def to_dict(self) -> dict[str, Any]:
        return {"lo": list(self.lo), "hi": list(self.hi), "h": self.h, "shape": list(self.shape)}


def shell_mask(shape: tuple[int, ...]) -> np.ndarray:
    """True on the outermost layer of lattice points."""
    mask = np.zeros(shape, dtype=bool)
    for axis, count in enumerate(shape):
        index = [slice(None)] * len(shape)
        for end in (0, count - 1):
            index[axis] = end
            mask[tuple(index)] = True
    return mask


@dataclass(frozen=True)
class GridFunction:
    """Sampled geometric convex function; np.inf marks +inf."""

    spec: GridSpec
    values: np.ndarray
    provenance: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise GridRangeError(f"Values of shape {self.values.shape} do not fit a {self.spec.shape} lattice")
        if np.any(np.isnan(self.values)):
            raise InvalidProfileError("Grid values contain nan")

    @property
    def dim(self) -> int:
        return self.spec.dim

    def value_at_origin(self) -> float:
        return float(self.values[self.spec.origin_index()])

    def weights(self, scale: float = 1.0) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(-scale * self.values)

    def leakage(self, scale: float = 1.0) -> float:
        """Fraction of the mass of e^{-scale f} on the outermost lattice shell."""
        w = self.weights(scale)
        total = float(w.sum())
        if total == 0:
            return 0.0
        return float(w[shell_mask(self.spec.shape)].sum()) / total

    def interpolator(self) -> RegularGridInterpolator:
        data = np.where(np.isinf(self.values), BIG, self.values)
        return RegularGridInterpolator(self.spec.axes(), data, method="linear", bounds_error=False, fill_value=None)

    def ray_slope(self, boundary, interp: RegularGridInterpolator | None = None) -> np.ndarray:
        """Slope of f along the ray through each boundary point, from one step inward."""
        interp = interp or self.interpolator()
        delta = self.spec.h / max(max(self.spec.hi), -min(self.spec.lo))
        outer = interp(boundary)
        inner = interp(boundary * (1.0 - delta))
        slope = (outer - inner) / delta
        return np.where(outer >= INF_CUT, BIG, np.maximum(slope, 0.0))

    def evaluate(self, points, interp: RegularGridInterpolator | None = None) -> np.ndarray:
        """Off-lattice values; outside the box f(t x_b) = f(x_b) + (t - 1) d(x_b) along rays."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        interp = interp or self.interpolator()
        t = self.spec.box_gauge(pts)
        vals = np.empty(len(pts))
        inside = t <= 1.0
        vals[inside] = interp(pts[inside])
        if np.any(~inside):
            boundary = pts[~inside] / t[~inside, None]
            outer = interp(boundary)
            vals[~inside] = outer + (t[~inside] - 1.0) * self.ray_slope(boundary, interp)
        return np.where(vals >= INF_CUT, np.inf, vals)


def _check_leak(f: GridFunction, leak_tol: float, error: type[Exception] = GridTooSmallError, scale: float = 1.0) -> float:
    leak = f.leakage(scale)
    if leak > leak_tol:
        raise error(f"{leak:.3g} of the mass sits on the lattice boundary (tolerance {leak_tol:g}); enlarge the range")
    if leak > LEAK_WARN:
        logger.warning("%.3g of the mass of %s sits on the lattice boundary", leak, f.provenance or "grid function")
    return leak


# -- sampling and integration ------------------------------------------------------------


def sample(
    source: Any,
    spec: GridSpec,
    matrix=None,
    leak_tol: float = DEFAULT_LEAK_TOL,
) -> GridFunction:
    """
    Sample a function on the lattice.

    Args:
        source: A RadialFunction, "gaussian" (|x|^2 / 2), "quadratic" (x^T Q x / 2
            with Q = matrix) or a callable mapping (m, n) points to m values
        spec: Lattice
        matrix: Positive-definite Q for "quadratic"
        leak_tol: Largest accepted boundary mass fraction

    Raises:
        GridTooSmallError: If more than leak_tol of the mass sits on the boundary
    """
    pts = spec.points()
    if isinstance(source, str):
        tag = source.lower()
        if tag == "gaussian":
            vals, name = 0.5 * np.sum(pts**2, axis=1), "gaussian"
        elif tag == "quadratic":
            if matrix is None:
                raise InvalidProfileError("quadratic sampling needs a matrix")
            q = np.asarray(matrix, dtype=float)
            vals, name = 0.5 * np.einsum("ij,jk,ik->i", pts, q, pts), "quadratic"
        else:
            raise InvalidProfileError(f"Unknown closed-form tag: {source}")
    elif callable(source):
        vals = np.asarray(source(pts), dtype=float)
        name = getattr(source, "__name__", "custom")
        if hasattr(source, "body"):
            name = f"radial({source.body.shape})"
    else:
        raise InvalidProfileError(f"Cannot sample {type(source).__name__}")
    values = vals.reshape(spec.shape)
    values[spec.origin_index()] = 0.0
    f = GridFunction(spec, values, provenance=name)
    _check_leak(f, leak_tol)
    return f


def integral_grid(f: GridFunction, scale: float = 1.0, leak_tol: float = DEFAULT_LEAK_TOL) -> float:
    """Riemann sum of e^{-scale f} h^n."""
    if not scale > 0:
        raise InvalidProfileError(f"scale must be positive, got {scale}")
    _check_leak(f, leak_tol, scale=scale)
    return float(f.weights(scale).sum()) * f.spec.h**f.dim


# -- transforms -----------------------------------------------------------------------


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by x."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def _conjugate_line(x: np.ndarray, h: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sup_i (x_i y - h_i) over finite h_i, and the maximizing index.

    On a tie between two hull vertices the one off the lattice ends wins.
    """
    finite = np.nonzero(np.isfinite(h))[0]
    if finite.size == 0:
        return np.full(y.shape, -np.inf), np.full(y.shape, len(x) // 2)
    xs, hs = x[finite], h[finite]
    hull = _lower_hull(xs, hs)
    slopes = np.diff(hs[hull]) / np.diff(xs[hull])
    kl = np.searchsorted(slopes, y, side="left")
    kr = np.searchsorted(slopes, y, side="right")
    last = len(x) - 1
    il, ir = finite[hull[kl]], finite[hull[kr]]
    on_end_l = (il == 0) | (il == last)
    on_end_r = (ir == 0) | (ir == last)
    k = np.where(on_end_l & ~on_end_r, kr, kl)
    idx = hull[k]
    return xs[idx] * y - hs[idx], finite[idx]


def _legendre(f: GridFunction, out: GridSpec) -> np.ndarray:
    n = f.dim
    xs, ys = f.spec.axes(), out.axes()
    arr = f.values
    argmax: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for axis in reversed(range(n)):
        h_in = arr if axis == n - 1 else -arr
        moved = np.moveaxis(h_in, axis, -1)
        rest = moved.shape[:-1]
        lines = moved.reshape(-1, moved.shape[-1])
        vals = np.empty((lines.shape[0], len(ys[axis])))
        arg = np.empty((lines.shape[0], len(ys[axis])), dtype=int)
        for i, line in enumerate(lines):
            vals[i], arg[i] = _conjugate_line(xs[axis], line, ys[axis])
        arr = np.moveaxis(vals.reshape(rest + (len(ys[axis]),)), -1, axis)
        argmax[axis] = np.moveaxis(arg.reshape(rest + (len(ys[axis]),)), -1, axis)
    # trace the maximizer back through the passes; a maximizer on the
    # lattice boundary means the sup lies beyond the sampled range
    idx = np.indices(out.shape)
    star: list[np.ndarray] = []
    for axis in range(n):
        star.append(argmax[axis][tuple(star) + tuple(idx[axis:])])
    on_shell = np.zeros(out.shape, dtype=bool)
    for axis, s in enumerate(star):
        on_shell |= (s == 0) | (s == f.spec.shape[axis] - 1)
    return np.where(on_shell, np.inf, np.maximum(arr, 0.0))


def _polarity(f: GridFunction, out: GridSpec, alpha: float) -> np.ndarray:
    pts = f.spec.points()
    vals = f.values.ravel()
    shell = shell_mask(f.spec.shape).ravel()
    zero = vals == 0
    pos = np.isfinite(vals) & (vals > 0)
    x_zero, x_pos, f_pos = pts[zero], pts[pos], vals[pos]
    # along the extended ray through a boundary point the sup tends to <x_b, y> / slope
    x_ray = pts[shell & np.isfinite(vals)]
    slope = f.ray_slope(x_ray) if len(x_ray) else np.empty(0)
    flat = slope <= 1e-12
    ys = out.points()
    result = np.empty(len(ys))
    rows = _block_rows(len(x_pos) + len(x_zero) + len(x_ray))
    for start in range(0, len(ys), rows):
        y = ys[start:start + rows]
        best = np.zeros(len(y))
        if len(x_pos):
            dots = y @ x_pos.T
            best = np.maximum(best, np.max((dots - 1.0) / f_pos, axis=1))
        blown = np.any(y @ x_zero.T > 1.0 + 1e-12, axis=1)
        if len(x_ray):
            ray_dots = y @ x_ray.T
            if np.any(~flat):
                best = np.maximum(best, np.max(ray_dots[:, ~flat] / slope[~flat], axis=1))
            if np.any(flat):
                blown |= np.any(ray_dots[:, flat] > 1e-12, axis=1)
        result[start:start + rows] = np.where(blown, np.inf, alpha * best)
    return result.reshape(out.shape)


def _block_rows(columns: int) -> int:
    return max(1, POLARITY_BLOCK // max(columns, 1))


def _gauge_j(f: GridFunction, out: GridSpec) -> np.ndarray:
    interp = f.interpolator()
    ys = out.points()
    result = np.full(len(ys), np.inf)
    g = f.spec.box_gauge(ys)
    nonzero = g > 0
    # s -> s f(y / s) is nonincreasing; as s -> 0 it tends to g d(y / g)
    limit = np.zeros(len(ys))
    limit[nonzero] = g[nonzero] * f.ray_slope(ys[nonzero] / g[nonzero, None], interp)
    at_zero = ~nonzero | (limit <= 1.0 + J_SLACK)
    result[at_zero] = 0.0
    todo = np.nonzero(~at_zero)[0]
    y = ys[todo]

    def feasible(s: np.ndarray) -> np.ndarray:
        return s * f.evaluate(y / s[:, None], interp) <= 1.0 + J_SLACK

    # interpolation overestimates a convex f near the origin, so s f(y / s)
    # is not monotone in s on the lattice; keep the smallest feasible rung
    hi = np.full(len(todo), np.inf)
    for k in range(J_LADDER_STEPS):
        rung = np.full(len(todo), J_SEARCH_MAX * 0.5**k)
        hi = np.where(feasible(rung), rung, hi)
    reachable = np.isfinite(hi)
    hi = np.where(reachable, hi, 1.0)
    lo = np.where(hi > J_SEARCH_MAX * 0.5 ** (J_LADDER_STEPS - 1), 0.5 * hi, 0.0)
    for _ in range(J_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        ok = feasible(np.maximum(mid, 1e-300))
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    result[todo] = np.where(reachable, hi, np.inf)
    return result.reshape(out.shape)


def transform_grid(
    f: GridFunction,
    kind: str,
    alpha: float = 1.0,
    out_spec: GridSpec | None = None,
    leak_tol: float = DEFAULT_LEAK_TOL,
) -> GridFunction:
    """
    Numerical Legendre, polarity or gauge transform of a sampled function.

    The output lattice defaults to the input one. If the transformed function
    leaks more than leak_tol of its mass onto the boundary, the output range is
    enlarged by 1.5 once.

    Raises:
        GridRangeError: If the output still leaks after the extension
    """
    kind = kind.lower()
    if kind not in ("legendre", "polarity", "gauge_j"):
        raise InvalidProfileError(f"Unsupported grid transform: {kind}")
    if kind == "polarity" and not alpha > 0:
        raise InvalidProfileError(f"Polarity needs alpha > 0, got {alpha}")
    spec = out_spec or f.spec
    for attempt in range(2):
        if kind == "legendre":
            vals = _legendre(f, spec)
        elif kind == "polarity":
            vals = _polarity(f, spec, alpha)
        else:
            vals = _gauge_j(f, spec)
        out = GridFunction(spec, vals, provenance=f"{kind}({f.provenance})")
        leak = out.leakage()
        if leak <= leak_tol:
            if leak > LEAK_WARN:
                logger.warning("%s output leaks %.3g of its mass", kind, leak)
            return out
        if attempt == 0:
            logger.info("%s output leaks %.3g; extending the range", kind, leak)
            spec = spec.extended()
    raise GridRangeError(f"{kind} output does not fit the lattice even after extension (leak {leak:.3g})")


# -- checks -----------------------------------------------------------------------------


@dataclass(frozen=True)
class InclusionResult:
    """Outcome of a level-set inclusion test; worst_slack < 0 means a violation."""

    holds: bool
    worst_slack: float
    checked_points: int


def level_inclusion_check(
    f: GridFunction, alpha: float, s: float, t: float, shrink: float = 1.0
) -> InclusionResult:
    """
    Check L_s(A_alpha f) within shrink * (s t / alpha + 1) (L_t f)° on the lattice.

    Membership in c K° is tested with the support function of the discrete
    level set: y in c K° iff max_{x in K} <x, y> <= c.

    Raises:
        InvalidProfileError: If either level set is empty
    """
    dual = transform_grid(f, "polarity", alpha)
    ys = dual.spec.points()[dual.values.ravel() <= s]
    xs = f.spec.points()[f.values.ravel() <= t]
    if len(ys) == 0 or len(xs) == 0:
        raise InvalidProfileError(f"Degenerate level sets at s={s}, t={t}")
    bound = shrink * (s * t / alpha + 1.0)
    worst = math.inf
    rows = _block_rows(len(xs))
    for start in range(0, len(ys), rows):
        support = np.max(ys[start:start + rows] @ xs.T, axis=1)
        worst = min(worst, float(np.min(bound - support)))
    return InclusionResult(holds=worst >= -1e-12, worst_slack=worst, checked_points=len(ys))


def _directions(n: int) -> list[np.ndarray]:
    dirs = [np.eye(n, dtype=int)[i] for i in range(n)]
    if n > 1:
        for signs in np.ndindex(*([2] * (n - 1))):
            dirs.append(np.array([1] + [1 if s else -1 for s in signs]))
    return dirs


def convexity_violation(f: GridFunction) -> float:
    """Largest negative second difference along axis lines and diagonals, relative to h."""
    worst = 0.0
    v = f.values
    for d in _directions(f.dim):
        left, mid, right = [], [], []
        for k, count in zip(d, v.shape):
            lo, hi = abs(k), count - abs(k)
            mid.append(slice(lo, hi))
            left.append(slice(lo - k, hi - k))
            right.append(slice(lo + k, hi + k))
        a, b, c = v[tuple(left)], v[tuple(mid)], v[tuple(right)]
        ok = np.isfinite(a) & np.isfinite(b) & np.isfinite(c)
        if np.any(ok):
            worst = max(worst, float(np.max(2 * b[ok] - a[ok] - c[ok])))
    return worst / f.spec.h


def is_convex(f: GridFunction) -> bool:
    return convexity_violation(f) <= CONVEXITY_RTOL


def mass_region(f: GridFunction, q: float = 0.99) -> np.ndarray:
    """Smallest set of lattice points carrying a fraction q of the mass of e^{-f}."""
    w = f.weights().ravel()
    order = np.argsort(-w, kind="stable")
    cum = np.cumsum(w[order]) / w.sum()
    keep = order[: int(np.searchsorted(cum, q)) + 1]
    mask = np.zeros(w.shape, dtype=bool)
    mask[keep] = True
    return mask.reshape(f.spec.shape)


def sup_distance(f: GridFunction, g: GridFunction, mask: np.ndarray | None = None) -> float:
    """max |f - g| with inf - inf read as 0."""
    _require_same_spec(f, g)
    a, b = f.values, g.values
    both = np.isinf(a) & np.isinf(b)
    with np.errstate(invalid="ignore"):
        diff = np.where(both, 0.0, np.abs(a - b))
    if mask is not None:
        diff = diff[mask]
    return float(np.max(diff)) if diff.size else 0.0


# -- algebra ------------------------------------------------------------------------------


def _require_same_spec(f: GridFunction, g: GridFunction) -> None:
    if f.spec != g.spec:
        raise BodyMismatchError("Grid functions live on different lattices")


def add(f: GridFunction, g: GridFunction) -> GridFunction:
    """f + g."""
    _require_same_spec(f, g)
    return GridFunction(f.spec, f.values + g.values, provenance=f"({f.provenance} + {g.provenance})")


def reflect(f: GridFunction) -> GridFunction:
    """x -> f(-x) on a symmetric lattice."""
    if not f.spec.is_symmetric:
        raise GridRangeError("Reflection needs a lattice symmetric about 0")
    return GridFunction(f.spec, np.flip(f.values), provenance=f"reflect({f.provenance})")


def inf_convolve_grid(f: GridFunction, g: GridFunction) -> GridFunction:
    """min_j f(x_j) + g(x_i - x_j) over lattice shifts, +inf where x_i - x_j leaves the lattice."""
    _require_same_spec(f, g)
    if not f.spec.is_symmetric:
        raise GridRangeError("Inf-convolution needs a lattice symmetric about 0")
    shape, origin = f.spec.shape, f.spec.origin_index()
    out = np.full(shape, np.inf)
    for j in zip(*np.nonzero(np.isfinite(f.values))):
        dst, src = [], []
        for jk, ok, count in zip(j, origin, shape):
            shift = jk - ok
            lo, hi = max(0, shift), min(count, count + shift)
            dst.append(slice(lo, hi))
            src.append(slice(lo - shift, hi - shift))
        dst_t = tuple(dst)
        np.minimum(out[dst_t], f.values[j] + g.values[tuple(src)], out=out[dst_t])
    return GridFunction(f.spec, out, provenance=f"infconv({f.provenance}, {g.provenance})")


def g_inf_convolve_grid(f: GridFunction, g: GridFunction) -> GridFunction:
    """J(Jf inf-conv Jg)."""
    jf = transform_grid(f, "gauge_j", leak_tol=1.0)
    jg = transform_grid(g, "gauge_j", leak_tol=1.0)
    return transform_grid(inf_convolve_grid(jf, jg), "gauge_j", leak_tol=1.0)


# -- dumps ------------------------------------------------------------------------------


def to_csv(f: GridFunction, path: str | Path) -> Path:
    """Rows (x_1, ..., x_n, value) with "inf" for +inf."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(f.dim)] + ["value"])
        for point, value in zip(f.spec.points(), f.values.ravel()):
            writer.writerow([repr(float(c)) for c in point] + ["inf" if math.isinf(value) else repr(float(value))])
    return path


def to_binary(f: GridFunction, path: str | Path) -> Path:
    """
    Compact dump.

    Layout (little endian): magic b"CDLG", uint32 version, uint32 n, float64 h,
    then n times (float64 lo, float64 hi, uint64 count), then the row-major
    float64 values with -1.0 standing for +inf.
    """
    path = Path(path)
    spec = f.spec
    header = struct.pack("<4sIId", BINARY_MAGIC, BINARY_VERSION, spec.dim, spec.h)
    for lo, hi, count in zip(spec.lo, spec.hi, spec.shape):
        header += struct.pack("<ddQ", lo, hi, count)
    body = np.where(np.isinf(f.values), BINARY_INF, f.values).astype("<f8").tobytes(order="C")
    path.write_bytes(header + body)
    return path


def from_binary(path: str | Path) -> GridFunction:
    """Read a dump written by to_binary."""
    raw = Path(path).read_bytes()
    try:
        magic, version, n, h = struct.unpack_from("<4sIId", raw, 0)
    except struct.error:
        raise GridRangeError(f"{path} is too short for a grid dump")
    if magic != BINARY_MAGIC or version != BINARY_VERSION:
        raise GridRangeError(f"{path} is not a grid dump")
    offset = struct.calcsize("<4sIId")
    lo, hi, shape = [], [], []
    for _ in range(n):
        a, b, c = struct.unpack_from("<ddQ", raw, offset)
        offset += struct.calcsize("<ddQ")
        lo.append(a)
        hi.append(b)
        shape.append(c)
    values = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(shape).astype(float)
    values = np.where(values == BINARY_INF, np.inf, values)
    return GridFunction(GridSpec(tuple(lo), tuple(hi), h), values, provenance=Path(path).name)


def resample(source: Callable[[np.ndarray], np.ndarray], spec: GridSpec, leak_tol: float = 1.0) -> GridFunction:
    """Sample an exact result on an output lattice without the leakage guard."""
    return sample(source, spec, leak_tol=leak_tol)

"""Verification suites behind the cdl command.

Each suite expands an ExperimentConfig into independent tasks, runs them
(optionally in a process pool), and writes <suite>.csv and <suite>.json.
Every row carries the provenance columns n, alpha, seed and tolerance.
"""

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from itertools import permutations, product, repeat
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import analysis as A
from . import grid as G
from .bodies import Ball, Box, ConvexBody, Simplex, VPolytope, ball_volume, random_vpolytope
from .config import ExperimentConfig
from .covering import (
    convolution_sandwich,
    covering_lp,
    covering_volume_bounds,
    duality_experiment,
    km_square_check,
    rs_ratio,
    submultiplicativity_check,
)
from .errors import ConfigError, ScaledPolarityError
from .profiles import Profile, transform_profile
from .radial import (
    RadialFunction,
    even_mahler_upper_bound,
    indicator,
    integral_exp,
    legendre_product,
    mahler_product_A,
    make_psi,
    norm,
    random_profile,
    random_radial,
    santalo_ratio,
    transform_radial,
)

logger = logging.getLogger(__name__)

SUPPORTED_SUITES = ["transforms", "exact-jl", "tight-jl", "mahler", "rho-table", "covering", "duality", "crosscheck"]
SUPPORTED_EXPORTS = ["lambda-vs-alpha", "gamma-vs-n", "h-curve", "covering-ratios"]

INVOLUTION_TOL = 1e-12
IDENTITY_RTOL = 1e-9
LAMBDA_TOL = 1e-8
WITNESS_GAP = 1e-4
WITNESS_STRICT = 1e-9
WITNESS_R = (0.0, 0.25, 0.5, 0.75, 0.9)
WITNESS_T0 = (0.25, 0.5, 1.0, 2.0, 4.0)
# points held to the full WITNESS_GAP
WITNESS_CORE_R = (0.0, 0.5)
WITNESS_CORE_T0 = (0.5, 2.0)
MAHLER_RTOL = 1e-6
MAHLER_IDENTITY_RTOL = 1e-8
OFF_CENTER_EPS = (1e-1, 1e-2, 1e-3)
OFF_CENTER_MAX_DIM = 3
# smallest accepted growth of the product from the first to the last eps
OFF_CENTER_GROWTH = 50.0
RHO_RTOL = 1e-10
RHO_INDEPENDENT_TOL = 2e-3
RHO_1 = 0.1718
SANDWICH_POINTS = 1000
LP_EXACT_TOL = 1e-6
LP_SLACK = 1.15
RS_NONSYMMETRIC = 3
DUALITY_PAIRS = 10
# covering LP lattices (half range, step) for the duality suite
DUALITY_LP_GRIDS = {1: (6.0, 1.0 / 16), 2: (2.0, 1.0 / 6)}
DUALITY_LP_MAX = 700
CROSSCHECK_DIMS = (1, 2)
CROSSCHECK_KINDS = {"legendre": None, "polarity": 1.0, "gauge_j": None}
CROSSCHECK_INT_RTOL = 1e-3
# two-dimensional crosscheck: integral range, transform input window and
# (half range, step) per output; a None step means the input step
CROSSCHECK_RANGE_2D = 12.0
CROSSCHECK_WINDOW_2D = 2.0
CROSSCHECK_OUT_2D = {"legendre": (3.0, None), "polarity": (10.0, 1.0 / 8), "gauge_j": (1.5, None)}


@dataclass
class SuiteOutcome:
    """Rows, summary and failures of one suite run."""

    suite: str
    config: ExperimentConfig
    rows: list[dict[str, Any]]
    summary: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "config": self.config.to_dict(),
            "summary": self.summary,
            "failures": self.failures,
            "rows": len(self.rows),
            "files": self.files,
        }


# -- row helpers ----------------------------------------------------------------------------


def _num(x: Any) -> Any:
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _row(config: ExperimentConfig, n: int, alpha: float | None, **cols: Any) -> dict[str, Any]:
    row = {"n": n, "alpha": alpha, "seed": config.seed, "tolerance": config.tolerance}
    row.update({k: _num(v) for k, v in cols.items()})
    return row


def _check(
    config: ExperimentConfig,
    check: str,
    n: int,
    alpha: float | None,
    item: str,
    value: float,
    expected: float | None,
    ok: bool,
    error: str = "",
) -> dict[str, Any]:
    return _row(config, n, alpha, check=check, item=item, value=value, expected=expected, ok=bool(ok), error=error)


def _guarded(config, check, n, alpha, item, fn: Callable[[], tuple[float, float | None, bool]]) -> dict[str, Any]:
    """Run one check, turning library errors into a failing row."""
    try:
        value, expected, ok = fn()
    except ScaledPolarityError as e:
        return _check(config, check, n, alpha, item, math.nan, None, False, f"{type(e).__name__}: {e}")
    return _check(config, check, n, alpha, item, value, expected, ok)


def _rng(config: ExperimentConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, *key])


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def standard_simplex(n: int) -> Simplex:
    """conv(0, e_1, ..., e_n) translated to its centroid."""
    return Simplex(np.vstack([np.zeros(n), np.eye(n)]), centered=True)


def family_bodies(n: int, families: list[str], rng: np.random.Generator) -> list[tuple[str, ConvexBody]]:
    """Bodies named by the config families; "random" contributes three polytopes."""
    bodies: list[tuple[str, ConvexBody]] = []
    for name in families:
        if name == "box":
            bodies.append(("box", Box(np.ones(n))))
        elif name == "ball":
            bodies.append(("ball", Ball(n)))
        elif name == "simplex":
            bodies.append(("simplex", standard_simplex(n)))
        elif name == "random":
            bodies.extend((f"random-{k}", random_vpolytope(n, rng)) for k in range(3))
        else:
            raise ConfigError(f"Unknown family: {name}")
    return bodies


def _symmetric_random(n: int, rng: np.random.Generator) -> VPolytope:
    verts = random_vpolytope(n, rng).vertices
    return VPolytope(np.vstack([verts, -verts]))


# -- transforms -------------------------------------------------------------------------------


def _alpha_tasks(config: ExperimentConfig) -> list[tuple]:
    return [(n, k, alpha) for n in config.n for k, alpha in enumerate(config.alphas_for(n))]


def _transforms_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    n, k, alpha = task
    rng = _rng(config, n, k)
    rows = []
    for s in range(config.samples):
        u = random_profile(rng)

        def involutions(u=u):
            ll = transform_profile(transform_profile(u, "legendre"), "legendre")
            aa = transform_profile(transform_profile(u, "polarity", alpha), "polarity", alpha)
            jj = transform_profile(transform_profile(u, "gauge_j"), "gauge_j")
            ok = all(p.same_as(u, INVOLUTION_TOL) for p in (ll, aa, jj))
            return float(ok), 1.0, ok

        def compositions(u=u):
            j = transform_profile(u, "gauge_j")
            la = transform_profile(transform_profile(u, "polarity"), "legendre")
            al = transform_profile(transform_profile(u, "legendre"), "polarity")
            ok = j.same_as(la, INVOLUTION_TOL) and j.same_as(al, INVOLUTION_TOL)
            return float(ok), 1.0, ok

        rows.append(_guarded(config, "involution", n, alpha, f"profile-{s}", involutions))
        rows.append(_guarded(config, "composition", n, alpha, f"profile-{s}", compositions))

    base = 1.0 / math.factorial(n)
    for name, body in family_bodies(n, config.families, rng):
        def norm_ratio(body=body):
            value = santalo_ratio(norm(body), alpha, "left")
            return value, base, _rel_err(value, base) <= IDENTITY_RTOL

        rows.append(_guarded(config, "norm_ratio", n, alpha, name, norm_ratio))

    for s in range(config.samples):
        phi = random_radial(n, rng)

        def ratio_product(phi=phi):
            left = santalo_ratio(phi, alpha, "left")
            twice = santalo_ratio(transform_radial(phi, "j_left", alpha), alpha, "left")
            value, expected = left * twice, alpha**-n
            return value, expected, _rel_err(value, expected) <= IDENTITY_RTOL

        rows.append(_guarded(config, "ratio_product", n, alpha, f"radial-{s}", ratio_product))
    return rows


# -- exact and tight regimes ------------------------------------------------------------------


def _exact_jl_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    n, k, alpha = task
    rng = _rng(config, n, k)
    base = 1.0 / math.factorial(n)
    lower = math.factorial(n) / alpha**n
    rows = []

    def lam():
        best = A.lambda_max(n, alpha)
        return best.lam, base, abs(best.lam - base) <= LAMBDA_TOL and best.r == 1.0

    rows.append(_guarded(config, "lambda", n, alpha, "lambda_max", lam))
    for s in range(config.samples):
        phi = random_radial(n, rng)

        def ratio(phi=phi):
            value = santalo_ratio(phi, alpha, "left")
            return value, base, lower - 1e-9 <= value <= base + 1e-9

        rows.append(_guarded(config, "ratio_range", n, alpha, f"radial-{s}", ratio))
    rows.extend(_witness_rows(config, n, alpha, base))
    return rows


def _witness_rows(config: ExperimentConfig, n: int, alpha: float, base: float) -> list[dict]:
    """Capped norms with r < 1 stay strictly below 1/n!; the core points by WITNESS_GAP."""
    rows = []
    for r, t0 in product(WITNESS_R, WITNESS_T0):
        core = r in WITNESS_CORE_R and t0 in WITNESS_CORE_T0
        need = WITNESS_GAP if core else WITNESS_STRICT * base

        def witness(r=r, t0=t0, need=need):
            value = float(A.sigma(n, alpha, r, t0))
            return value, base, base - value >= need

        rows.append(_guarded(config, "witness_gap", n, alpha, f"r={r},t0={t0}", witness))
    gaps = [base - row["value"] for row in rows]
    sampled = f"r in {list(WITNESS_R)}, t0 in {list(WITNESS_T0)}"
    rows.append(
        _check(config, "witness_sweep", n, alpha, sampled, min(gaps), 0.0, all(row["ok"] for row in rows))
    )
    return rows


def _tight_jl_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    n, _, alpha = task
    try:
        report = A.regime_report(n, alpha)
    except ScaledPolarityError as e:
        return [_row(config, n, alpha, check="regime", ok=False, error=f"{type(e).__name__}: {e}")]
    data = report.to_dict()
    verdicts = data.pop("verdicts")
    data.pop("n")
    data.pop("alpha")
    ok = all(verdicts.values()) and report.regime == "tight"
    return [_row(config, n, alpha, check="regime", **data, **verdicts, ok=ok, error="")]


def _tight_jl_summary(rows: list[dict]) -> tuple[dict, list[str]]:
    good = [r for r in rows if r.get("ok")]
    summary: dict[str, Any] = {}
    failures = [f"n={r['n']} alpha={r['alpha']:.6g}: {r.get('error') or 'verdict failed'}" for r in rows if not r.get("ok")]
    if good:
        c = min(r["measured_c"] for r in good)
        summary = {"measured_c": c, "measured_K": max(r["measured_C"] for r in good)}
        if not c > 0:
            failures.append(f"gamma >= 1 + c/n needs c > 0, measured {c}")
        logger.info("tight regime constants: %s", summary)
    return summary, failures


# -- Mahler products ----------------------------------------------------------------------------


def _mahler_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    n, k, alpha = task
    rng = _rng(config, n, k)
    ball = Ball(n)
    vol = ball_volume(n)
    rows = []

    def indicator_product():
        value, expected = mahler_product_A(indicator(ball), alpha), vol**2
        return value, expected, _rel_err(value, expected) <= MAHLER_RTOL

    def norm_product():
        value, expected = mahler_product_A(norm(ball), alpha), (math.factorial(n) * vol) ** 2 / alpha**n
        return value, expected, _rel_err(value, expected) <= MAHLER_RTOL

    rows.append(_guarded(config, "mahler_value", n, alpha, "ball-indicator", indicator_product))
    rows.append(_guarded(config, "mahler_value", n, alpha, "ball-norm", norm_product))
    if n <= OFF_CENTER_MAX_DIM:
        rows.extend(_off_center_rows(config, n, alpha))
    bound = even_mahler_upper_bound(n, alpha)
    for s in range(max(1, config.samples // 2)):
        phi = random_radial(n, rng, symmetric=True)

        def identity(phi=phi):
            value = mahler_product_A(phi, alpha)
            dual = transform_radial(phi, "legendre")
            expected = santalo_ratio(dual, alpha, "left") * legendre_product(phi)
            return value, expected, _rel_err(value, expected) <= MAHLER_IDENTITY_RTOL

        def even_bound(phi=phi):
            value = mahler_product_A(phi, alpha)
            return value, bound, value <= bound * (1 + 1e-12)

        rows.append(_guarded(config, "mahler_identity", n, alpha, f"symmetric-{s}", identity))
        rows.append(_guarded(config, "even_bound", n, alpha, f"symmetric-{s}", even_bound))
    return rows


def off_center_cube(n: int, eps: float) -> VPolytope:
    """[-eps, 2 - eps]^n: the origin sits eps away from a facet."""
    corners = np.array(list(product((-eps, 2.0 - eps), repeat=n)))
    return VPolytope(corners)


def _off_center_rows(config: ExperimentConfig, n: int, alpha: float) -> list[dict]:
    """Without a centering condition the product is unbounded as the origin nears a facet."""
    rows = []
    for eps in OFF_CENTER_EPS:
        def value(eps=eps):
            got = mahler_product_A(indicator(off_center_cube(n, eps)), alpha)
            expected = (2.0 * (1.0 / eps + 1.0 / (2.0 - eps))) ** n
            return got, expected, _rel_err(got, expected) <= MAHLER_RTOL

        rows.append(_guarded(config, "off_center", n, alpha, f"eps={eps:g}", value))
    values = [r["value"] for r in rows]

    def growth():
        ratio = values[-1] / values[0]
        grows = all(b > a for a, b in zip(values, values[1:]))
        return ratio, OFF_CENTER_GROWTH, grows and ratio >= OFF_CENTER_GROWTH

    rows.append(_guarded(config, "off_center_growth", n, alpha, "eps->0", growth))
    return rows


# -- rho table ---------------------------------------------------------------------------------


def rho_decimal(n: int, digits: int = 34, steps: int = 200) -> Decimal:
    """rho_n by bisection in Decimal arithmetic, independent of the float code path."""
    with localcontext() as ctx:
        ctx.prec = digits
        one = Decimal(1)
        root = Decimal(math.factorial(n)) ** (one / n)
        target = (2 * root / (n + 2)) ** (Decimal(n) / (n + 2))

        def q(x: Decimal) -> Decimal:
            s = (one - x).sqrt()
            return (one - s) * x ** (-one / (n + 2)) * s.exp()

        lo, hi = Decimal("1e-30"), one
        for _ in range(steps):
            mid = (lo + hi) / 2
            if (q(mid) - target) * (q(lo) - target) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 8


def _rho_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    (n,) = task
    try:
        rho = A.compute_rho(n)
    except ScaledPolarityError as e:
        return [_row(config, n, None, check="rho", ok=False, error=f"{type(e).__name__}: {e}")]
    target = A.rho_target(n)
    residual = abs(float(A.q_function(n, 4 * rho)) - target) / target
    independent = float(rho_decimal(n))
    ok = 0 < rho < 0.25 and residual <= RHO_RTOL and abs(rho - independent) <= RHO_INDEPENDENT_TOL
    if n == 1:
        ok = ok and abs(rho - RHO_1) <= RHO_INDEPENDENT_TOL
    return [
        _row(
            config, n, A.threshold(n),
            check="rho", rho=rho, target=target, q_residual=residual, threshold=A.threshold(n),
            independent=independent, ok=ok, error="",
        )
    ]


# -- covering ------------------------------------------------------------------------------------


def _covering_tasks(config: ExperimentConfig) -> list[tuple]:
    tasks: list[tuple] = [("functional", n) for n in config.n if n <= G.MAX_GRID_DIM]
    if 1 in config.n:
        tasks.append(("lp", 1))
    return tasks


def _covering_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    kind, n = task
    if kind == "lp":
        return _covering_lp_rows(config)
    rng = _rng(config, n)
    rows = []
    pairs = max(1, config.samples // 2)
    for s in range(pairs):
        body = random_vpolytope(n, rng)
        phi = RadialFunction(body, random_profile(rng))
        psi = RadialFunction(body, random_profile(rng))
        pts = 2.0 * rng.standard_normal((SANDWICH_POINTS, n))

        def sandwich(phi=phi, psi=psi, pts=pts):
            low, mid, high = convolution_sandwich(phi, psi, pts)
            with np.errstate(invalid="ignore"):
                gaps = np.concatenate([mid - low, high - mid])
            gaps = np.nan_to_num(gaps, nan=0.0, posinf=np.inf, neginf=-np.inf)
            worst = float(gaps.min())
            return worst, 0.0, worst >= -1e-9

        def km(phi=phi):
            a, b, c = km_square_check(phi)
            return b / a, None, True

        rows.append(_guarded(config, "sandwich", n, None, f"pair-{s}", sandwich))
        rows.append(_guarded(config, "km_square", n, None, f"pair-{s}", km))

    bound = 8.0**n
    sources = [(f"symmetric-{s}", random_radial(n, rng, symmetric=True)) for s in range(pairs)]
    if n <= 2:
        sources += [(f"shifted-{s}", random_radial(n, rng)) for s in range(RS_NONSYMMETRIC)]
    sources.append(("ball-indicator", indicator(Ball(n))))
    for name, phi in sources:
        def rs(phi=phi):
            value = rs_ratio(phi)
            return value, bound, value <= bound

        rows.append(_guarded(config, "rs_ratio", n, None, name, rs))
    return rows


def _interval(radius: float) -> RadialFunction:
    return indicator(Box([1.0]), radius)


def _covering_lp_rows(config: ExperimentConfig) -> list[dict]:
    rows = []
    spec = G.GridSpec.cube(1, 4.0, 1.0 / 32)

    def two_windows():
        res = covering_lp(G.sample(_interval(2.0), spec, leak_tol=1.0), G.sample(_interval(1.0), spec, leak_tol=1.0))
        return res.value, 2.0, abs(res.value - 2.0) <= LP_EXACT_TOL

    def nested():
        f, g, h = (G.sample(_interval(r), spec, leak_tol=1.0) for r in (3.0, 2.0, 1.0))
        res = submultiplicativity_check(f, g, h)
        return res.n_fh, res.n_fg * res.n_gh, res.holds

    rows.append(_guarded(config, "lp_value", 1, None, "interval-2-by-interval-1", two_windows))
    rows.append(_guarded(config, "submultiplicative", 1, None, "intervals-3-2-1", nested))

    line = Box([1.0])
    pairs = {
        "abs/abs": (norm(line), norm(line)),
        "2abs/abs": (RadialFunction(line, Profile.identity().scale_values(2.0)), norm(line)),
        "abs/2abs": (norm(line), RadialFunction(line, Profile.identity().scale_values(2.0))),
        "capped/abs": (make_psi(line, 0.5, 1.0), norm(line)),
    }
    coarse, fine = G.GridSpec.cube(1, 6.0, 1.0 / 16), G.GridSpec.cube(1, 6.0, 1.0 / 32)
    for name, (phi, psi) in pairs.items():
        try:
            est = covering_volume_bounds(phi, psi)
            values = [
                covering_lp(G.sample(phi, spec_, leak_tol=1.0), G.sample(psi, spec_, leak_tol=1.0)).value
                for spec_ in (coarse, fine)
            ]
        except ScaledPolarityError as e:
            rows.append(_row(config, 1, None, check="lp_corridor", item=name, ok=False, error=f"{type(e).__name__}: {e}"))
            continue
        slack = max(values[0] / values[1], values[1] / values[0])
        lp = values[1]
        ok = est.lower_bound / LP_SLACK <= lp <= est.upper_even * LP_SLACK and slack <= LP_SLACK
        rows.append(
            _row(
                config, 1, None, check="lp_corridor", item=name,
                lower_bound=est.lower_bound, upper_even=est.upper_even, upper_infc=est.upper_infc,
                upper_ginf=est.upper_ginf, lp_value=lp, lp_coarse=values[0], slack=slack, ok=ok, error="",
            )
        )
    return rows


def _covering_summary(rows: list[dict]) -> tuple[dict, list[str]]:
    rs = [r["value"] for r in rows if r.get("check") == "rs_ratio" and r.get("ok")]
    summary = {"rs_ratio_max": max(rs)} if rs else {}
    slacks = [r["slack"] for r in rows if r.get("check") == "lp_corridor" and r.get("ok")]
    if slacks:
        summary["lp_slack_max"] = max(slacks)
    return summary, _default_failures(rows)


# -- duality ---------------------------------------------------------------------------------------


def _duality_functions(n: int, rng: np.random.Generator) -> list[tuple[str, RadialFunction]]:
    bodies = [("ball", Ball(n)), ("cube", Box(np.ones(n))), ("symrand", _symmetric_random(n, rng))]
    out = []
    for name, body in bodies:
        out.append((f"{name}-indicator", indicator(body)))
        out.append((f"{name}-norm", norm(body)))
    return out


def _duality_tasks(config: ExperimentConfig) -> list[tuple]:
    tasks: list[tuple] = []
    for n in config.n:
        for k, alpha in enumerate(config.alphas_for(n)):
            tasks.extend(("pair", n, k, alpha, p) for p in range(DUALITY_PAIRS))
    tasks.extend(("control", n, 0, 1.0, 0) for n in (1, 2, 3))
    return tasks


def _duality_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    kind, n, k, alpha, p = task
    if kind == "control":
        ball = Ball(n)
        phi, psi, name = indicator(ball), norm(ball), "ball-indicator/ball-norm"
    else:
        funcs = _duality_functions(n, _rng(config, n, k))
        ordered = list(permutations(range(len(funcs)), 2))
        chosen = sorted(_rng(config, n, k, 1).choice(len(ordered), size=DUALITY_PAIRS, replace=False))
        i, j = ordered[chosen[p]]
        (name_i, phi), (name_j, psi) = funcs[i], funcs[j]
        name = f"{name_i}/{name_j}"
    lp_spec = duality_lp_spec(n)
    try:
        report = duality_experiment(phi, psi, alpha, lp_spec=lp_spec, lp_max_constraints=DUALITY_LP_MAX)
    except ScaledPolarityError as e:
        return [_row(config, n, alpha, check=kind, pair=name, ok=False, error=f"{type(e).__name__}: {e}")]
    if report.measured:
        ok = math.isfinite(report.ratio) and report.ratio > 0
    else:
        ok = report.ratio_lo > 0 and math.isfinite(report.ratio_hi)
    return [
        _row(
            config, n, alpha, check=kind, pair=name,
            lower_bound=report.primal.lower_bound, upper_even=report.primal.upper_even,
            upper_infc=report.primal.upper_infc, upper_ginf=report.primal.upper_ginf,
            lp_value=report.primal.lp_value, greedy_value=report.primal.greedy_value,
            dual_lower_bound=report.dual.lower_bound, dual_upper_even=report.dual.upper_even,
            dual_lp_value=report.dual.lp_value,
            primal_estimate=report.primal_estimate, dual_estimate=report.dual_estimate,
            source=report.source, measured=report.measured, ratio=report.ratio, corridor=report.corridor,
            ratio_lo=report.ratio_lo, ratio_hi=report.ratio_hi, lp_grid=_lattice_label(lp_spec) if lp_spec else "",
            ok=ok, error="",
        )
    ]


def duality_lp_spec(n: int) -> G.GridSpec | None:
    """Lattice for the covering LPs of the duality suite; None above two dimensions."""
    if n not in DUALITY_LP_GRIDS:
        return None
    half, h = DUALITY_LP_GRIDS[n]
    return G.GridSpec.cube(n, half, h)


def _duality_summary(rows: list[dict]) -> tuple[dict, list[str]]:
    failures = _default_failures(rows)
    summary: dict[str, Any] = {}
    pairs = [r for r in rows if r.get("check") == "pair" and r.get("ok")]
    for n in sorted({r["n"] for r in pairs}):
        measured = [r["corridor"] for r in pairs if r["n"] == n and r["measured"]]
        bounded = [r for r in pairs if r["n"] == n and not r["measured"]]
        entry: dict[str, Any] = {}
        if measured:
            entry.update(c=min(measured), C=max(measured), source="lp")
        if bounded:
            entry["volume_bounds"] = {
                "c_lower": min(r["ratio_lo"] ** (1.0 / n) for r in bounded),
                "C_upper": max(r["ratio_hi"] ** (1.0 / n) for r in bounded),
            }
        summary[f"n={n}"] = entry
    control = sorted((r for r in rows if r.get("check") == "control" and r.get("ok")), key=lambda r: r["n"])
    ratios = [r["ratio"] for r in control if r["measured"]]
    diffs = np.diff(ratios)
    rising = bool(np.all(diffs > 0))
    monotone = len(ratios) >= 2 and (rising or bool(np.all(diffs < 0)))
    summary["control_ratios"] = ratios
    summary["control_bounds"] = {r["n"]: [r["ratio_lo"], r["ratio_hi"]] for r in control if not r["measured"]}
    summary["control_monotone"] = monotone
    if not monotone:
        failures.append(f"unscaled control ratios do not drift monotonically: {ratios}")
    else:
        # unmeasured dimensions only have to leave room for the trend
        for r in control:
            if r["measured"] or r["n"] < max(c["n"] for c in control if c["measured"]):
                continue
            if (rising and r["ratio_hi"] <= ratios[-1]) or (not rising and r["ratio_lo"] >= ratios[-1]):
                failures.append(f"control bounds at n={r['n']} contradict the drift of {ratios}")
    return summary, failures


# -- crosscheck ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class CrosscheckLattices:
    """Where a crosscheck samples, which window feeds the transforms, and each output lattice."""

    sample: G.GridSpec
    window: G.GridSpec
    outputs: dict[str, G.GridSpec]

    @property
    def sup_tol(self) -> float:
        return 2.0 * self.window.h


def _lattice_label(spec: G.GridSpec) -> str:
    return f"[{spec.lo[0]:g},{spec.hi[0]:g}]^{spec.dim} h={spec.h:g}"


def crosscheck_lattices(config: ExperimentConfig, n: int) -> CrosscheckLattices:
    """
    Lattices for one crosscheck dimension.

    In one dimension everything runs on the configured lattice. In two, the
    integral is taken on a wide lattice, the transforms read a window around
    the origin (rays extend it) and write to a lattice sized for each result;
    the polarity output is coarser because each of its values is a direct sup
    over the whole input window.
    """
    h = config.grid_h
    if n == 1:
        spec = G.GridSpec.cube(1, config.grid_range, h)
        return CrosscheckLattices(spec, spec, {kind: spec for kind in CROSSCHECK_KINDS})
    outputs = {
        kind: G.GridSpec.cube(n, half, max(h, step or h)) for kind, (half, step) in CROSSCHECK_OUT_2D.items()
    }
    return CrosscheckLattices(
        G.GridSpec.cube(n, CROSSCHECK_RANGE_2D, h), G.GridSpec.cube(n, CROSSCHECK_WINDOW_2D, h), outputs
    )


def _crosscheck_functions(n: int) -> list[tuple[str, RadialFunction]]:
    return [
        ("cube-norm", norm(Box(np.ones(n)))),
        ("ball-norm", norm(Ball(n))),
        ("ball-capped", make_psi(Ball(n), 0.5, 1.0)),
    ]


def _crosscheck_tasks(config: ExperimentConfig) -> list[tuple]:
    dims = [n for n in config.n if n in CROSSCHECK_DIMS]
    skipped = sorted(set(config.n) - set(dims))
    if skipped:
        logger.info("crosscheck runs on n in %s; skipping %s", CROSSCHECK_DIMS, skipped)
    return [(n, k) for n in dims for k in range(len(_crosscheck_functions(n)))]


def _crosscheck_task(config: ExperimentConfig, task: tuple) -> list[dict]:
    n, k = task
    name, phi = _crosscheck_functions(n)[k]
    try:
        lattices = crosscheck_lattices(config, n)
        f = G.sample(phi, lattices.sample)
        # no leak check: the window holds only part of the mass
        window = f if lattices.window == lattices.sample else G.sample(phi, lattices.window, leak_tol=1.0)
    except ScaledPolarityError as e:
        return [_check(config, "sample", n, None, name, math.nan, None, False, f"{type(e).__name__}: {e}")]
    tol = lattices.sup_tol
    rows = []

    def integral():
        value, expected = G.integral_grid(f), integral_exp(phi)
        return value, expected, _rel_err(value, expected) <= CROSSCHECK_INT_RTOL

    row = _guarded(config, "integral", n, None, name, integral)
    row.update(input_lattice=_lattice_label(lattices.sample), rel_tol=CROSSCHECK_INT_RTOL)
    rows.append(row)
    for kind, alpha in CROSSCHECK_KINDS.items():
        out_spec = lattices.outputs[kind]
        used = {"spec": out_spec}

        def compare(kind=kind, alpha=alpha, out_spec=out_spec, used=used):
            grid_out = G.transform_grid(window, kind, alpha or 1.0, out_spec=out_spec)
            used["spec"] = grid_out.spec
            exact = G.sample(transform_radial(phi, kind, alpha or 1.0), grid_out.spec, leak_tol=1.0)
            mask = G.mass_region(exact)
            dist = G.sup_distance(grid_out, exact, mask)
            return dist, tol, dist <= tol

        row = _guarded(config, kind, n, alpha, name, compare)
        row.update(
            input_lattice=_lattice_label(lattices.window),
            output_lattice=_lattice_label(used["spec"]),
            sup_tol=tol,
        )
        rows.append(row)
    if n == 1:
        def composition():
            direct = G.transform_grid(f, "gauge_j")
            composed = G.transform_grid(G.transform_grid(f, "polarity", 1.0), "legendre", out_spec=direct.spec)
            exact = G.sample(transform_radial(phi, "gauge_j"), direct.spec, leak_tol=1.0)
            dist = G.sup_distance(direct, composed, G.mass_region(exact))
            return dist, tol, dist <= tol

        row = _guarded(config, "j_composition", n, 1.0, name, composition)
        row.update(input_lattice=_lattice_label(lattices.sample), sup_tol=tol)
        rows.append(row)
    return rows


# -- driver ---------------------------------------------------------------------------------------


def _default_failures(rows: list[dict]) -> list[str]:
    return [
        f"{r.get('check')} n={r['n']} alpha={r['alpha']} {r.get('item') or r.get('pair') or ''}: "
        f"{r.get('error') or 'value ' + str(r.get('value')) + ' vs ' + str(r.get('expected'))}".strip()
        for r in rows
        if not r.get("ok")
    ]


def _default_summary(rows: list[dict]) -> tuple[dict, list[str]]:
    checks: dict[str, int] = {}
    for r in rows:
        checks[r.get("check", "")] = checks.get(r.get("check", ""), 0) + 1
    return {"checks": checks}, _default_failures(rows)


_SUITES: dict[str, tuple[Callable, Callable, Callable]] = {
    "transforms": (_alpha_tasks, _transforms_task, _default_summary),
    "exact-jl": (_alpha_tasks, _exact_jl_task, _default_summary),
    "tight-jl": (_alpha_tasks, _tight_jl_task, _tight_jl_summary),
    "mahler": (_alpha_tasks, _mahler_task, _default_summary),
    "rho-table": (lambda c: [(n,) for n in c.n], _rho_task, _default_summary),
    "covering": (_covering_tasks, _covering_task, _covering_summary),
    "duality": (_duality_tasks, _duality_task, _duality_summary),
    "crosscheck": (_crosscheck_tasks, _crosscheck_task, _default_summary),
}


def _run_task(suite: str, config: dict[str, Any], task: tuple) -> list[dict]:
    return _SUITES[suite][1](ExperimentConfig(**config), task)


def _sort_key(row: dict[str, Any]) -> tuple:
    alpha = row.get("alpha")
    return (
        str(row.get("check", "")),
        row.get("n", 0),
        -1.0 if alpha is None else float(alpha),
        str(row.get("item") or row.get("pair") or ""),
    )


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, rows: list[dict[str, Any]]) -> Path:
    """Write rows with the union of their keys as columns, in first-seen order."""
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def run_suite(config: ExperimentConfig, write: bool = True) -> SuiteOutcome:
    """
    Run one verification suite.

    Args:
        config: Validated experiment configuration
        write: Write <suite>.csv and <suite>.json under config.out

    Returns:
        SuiteOutcome; outcome.passed is False when any check failed
    """
    config.validate()
    make_tasks, task_fn, summarize = _SUITES[config.suite]
    tasks = make_tasks(config)
    logger.info("suite %s: %d tasks, %d workers", config.suite, len(tasks), config.workers)
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_task, repeat(config.suite), repeat(config.to_dict()), tasks))
    else:
        chunks = [task_fn(config, t) for t in tasks]
    rows = sorted((r for chunk in chunks for r in chunk), key=_sort_key)
    summary, failures = summarize(rows)
    outcome = SuiteOutcome(config.suite, config, rows, summary, failures)
    if write:
        out = config.out_dir
        out.mkdir(parents=True, exist_ok=True)
        csv_path = write_csv(out / f"{config.suite}.csv", rows)
        json_path = out / f"{config.suite}.json"
        json_path.write_text(json.dumps(outcome.to_dict(), indent=2, sort_keys=True, default=_json_default) + "\n")
        outcome.files = [str(csv_path), str(json_path)]
        logger.info("suite %s: wrote %s", config.suite, ", ".join(outcome.files))
    logger.info("suite %s: %d rows, %d failures", config.suite, len(rows), len(failures))
    return outcome


# -- plot data -------------------------------------------------------------------------------------


def _read_csv(path: Path) -> list[dict[str, str]]:
    if not path.exists():
        return []
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _require(rows: list[dict[str, str]], columns: list[str], source: str) -> None:
    if not rows:
        raise ConfigError(f"No suite output found for {source}")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise ConfigError(f"{source} lacks columns {missing}")


def export_plot_data(
    source: str | Path,
    kind: str,
    n: int = 1,
    alpha: float = 2.0,
    out: str | Path | None = None,
) -> Path:
    """
    Turn suite output into a tidy CSV for external plotting.

    Args:
        source: Directory holding suite outputs
        kind: lambda-vs-alpha, gamma-vs-n, h-curve or covering-ratios
        n: Dimension for h-curve
        alpha: Scaling parameter for h-curve
        out: Target file, <source>/<kind>.csv by default

    Raises:
        ConfigError: If the kind is unknown or the needed columns are missing
    """
    src = Path(source)
    target = Path(out) if out else src / f"{kind}.csv"
    if kind == "lambda-vs-alpha":
        tight = _read_csv(src / "tight-jl.csv")
        exact = [r for r in _read_csv(src / "exact-jl.csv") if r.get("check") == "lambda"]
        rows = [{"n": r["n"], "alpha": r["alpha"], "lam": r["lam"], "regime": "tight"} for r in tight if r.get("lam")]
        rows += [{"n": r["n"], "alpha": r["alpha"], "lam": r["value"], "regime": "exact"} for r in exact]
        _require(rows, ["n", "alpha", "lam"], "lambda-vs-alpha")
    elif kind == "gamma-vs-n":
        tight = _read_csv(src / "tight-jl.csv")
        _require(tight, ["n", "alpha", "gamma"], "tight-jl.csv")
        rows = [{"n": r["n"], "alpha": r["alpha"], "gamma": r["gamma"]} for r in tight if r.get("gamma")]
    elif kind == "h-curve":
        z = np.geomspace(0.05, 20.0, 400)
        rows = []
        for zi in z:
            value, deriv = A.h_eval(n, alpha, float(zi))
            rows.append({"n": n, "alpha": alpha, "z": float(zi), "h": value, "dh": deriv})
    elif kind == "covering-ratios":
        fields_ = ["n", "alpha", "lower_bound", "upper_even", "upper_infc", "upper_ginf", "lp_value", "greedy_value"]
        found = [r for name in ("duality.csv", "covering.csv") for r in _read_csv(src / name) if r.get("lower_bound")]
        _require(found, fields_, "covering-ratios")
        rows = [
            {"pair": r.get("pair") or r.get("item", ""), **{c: r[c] for c in fields_}, "ratio": r.get("ratio", "")}
            for r in found
        ]
    else:
        raise ConfigError(f"Unsupported export: {kind}. Supported exports: {SUPPORTED_EXPORTS}")
    target.parent.mkdir(parents=True, exist_ok=True)
    write_csv(target, rows)
    logger.info("export %s: %d rows to %s", kind, len(rows), target)
    return target


# -- session ---------------------------------------------------------------------------------------


class ExperimentSession:
    """Current configuration plus the outcomes of the suites run so far."""

    def __init__(self, config: ExperimentConfig | None = None):
        self.config = config or ExperimentConfig()
        self.history: list[SuiteOutcome] = []

    @property
    def last(self) -> SuiteOutcome | None:
        return self.history[-1] if self.history else None

    def run(self, **overrides: Any) -> SuiteOutcome:
        """Run a suite with the session config updated by overrides."""
        self.config = self.config.with_overrides(**overrides)
        outcome = run_suite(self.config)
        self.history.append(outcome)
        return outcome

    def status(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "runs": len(self.history),
            "last": self.last.to_dict() if self.last else None,
        }

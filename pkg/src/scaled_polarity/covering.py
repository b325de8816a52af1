"""Functional covering numbers N(e^{-phi}, e^{-psi}).

N(f, g) is the least total mass of a nonnegative measure mu with mu * g >= f.
Exact radial formulas cover pairs on one body; mixed pairs fall back to the
lattice backend in grid.py.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import linprog

from . import grid as G
from .errors import BodyMismatchError, CoveringLPError, InequalityViolationError, PreconditionError
from .profiles import g_inf_conv_profile, inf_conv_profile
from .radial import (
    BARYCENTER_TOL,
    RadialFunction,
    add,
    barycenter,
    integral_exp,
    integral_exp_power,
    transform_radial,
)

logger = logging.getLogger(__name__)

LP_MAX_CONSTRAINTS = 512
GREEDY_MAX_CONSTRAINTS = 20000
# Lattice points where e^{-f} falls below this carry no constraint.
MASS_CUTOFF = 1e-9
LP_TOL = 1e-9
SUBMULT_SLACK = 1.1
INEQ_RTOL = 1e-12

# (half range, step) of the lattice used when exact radial formulas do not apply.
FALLBACK_GRIDS = {1: (8.0, 1.0 / 64), 2: (6.0, 1.0 / 4), 3: (4.0, 1.0 / 2)}


def fallback_spec(n: int) -> G.GridSpec:
    """Lattice used for mixed-body pairs."""
    if n not in FALLBACK_GRIDS:
        raise BodyMismatchError(f"Mixed-body pairs need the grid backend, which stops at n = {G.MAX_GRID_DIM}")
    half, h = FALLBACK_GRIDS[n]
    return G.GridSpec.cube(n, half, h)


# -- radial operations ---------------------------------------------------------------------


def reflect(phi: RadialFunction) -> RadialFunction:
    """phi^-(x) = phi(-x), i.e. (-K, u)."""
    return phi.reflected()


def _same_body(phi: RadialFunction, psi: RadialFunction) -> bool:
    return phi.dim == psi.dim and phi.body.same_body(psi.body)


def _require_same_body(phi: RadialFunction, psi: RadialFunction) -> None:
    if not _same_body(phi, psi):
        raise BodyMismatchError(
            f"Exact convolutions need one body ({phi.body.shape} vs {psi.body.shape}); "
            "use inf_convolve_grid / g_inf_convolve_grid for mixed pairs"
        )


def inf_conv(phi: RadialFunction, psi: RadialFunction) -> RadialFunction:
    """(phi inf-conv psi)(x) = inf_y phi(y) + psi(x - y) for two functions on one body."""
    _require_same_body(phi, psi)
    return RadialFunction(phi.body, inf_conv_profile(phi.profile, psi.profile))


def g_inf_conv(phi: RadialFunction, psi: RadialFunction) -> RadialFunction:
    """J(J phi inf-conv J psi) for two functions on one body."""
    _require_same_body(phi, psi)
    return RadialFunction(phi.body, g_inf_conv_profile(phi.profile, psi.profile))


def convolution_sandwich(phi: RadialFunction, psi: RadialFunction, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values (2 (phi g-conv psi)(x / 2), (phi inf-conv psi)(x), 2 (phi g-conv psi)(x)) at points x."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    g = g_inf_conv(phi, psi)
    return 2.0 * g(pts / 2.0), inf_conv(phi, psi)(pts), 2.0 * g(pts)


# -- mixed-body integrals ------------------------------------------------------------------


class _LatticePair:
    """phi, psi and their reflections sampled on one lattice, sampled lazily."""

    def __init__(self, phi: RadialFunction, psi: RadialFunction, spec: G.GridSpec | None = None):
        self.spec = spec or fallback_spec(phi.dim)
        self._sources = {"phi": phi, "psi": psi, "phi-": reflect(phi), "psi-": reflect(psi)}
        self._cache: dict[str, G.GridFunction] = {}

    def __getitem__(self, key: str) -> G.GridFunction:
        if key not in self._cache:
            self._cache[key] = G.sample(self._sources[key], self.spec, leak_tol=1.0)
        return self._cache[key]

    def integral(self, f: G.GridFunction, scale: float = 1.0) -> float:
        return G.integral_grid(f, scale, leak_tol=1.0)


def _sum_integral(phi: RadialFunction, psi: RadialFunction, lattice: _LatticePair) -> float:
    """int e^{-(phi + psi)}, exact when both share a body."""
    if _same_body(phi, psi):
        return integral_exp(add(phi, psi))
    return lattice.integral(G.add(lattice["phi"], lattice["psi"]))


# -- volume bounds -------------------------------------------------------------------------


@dataclass
class CoveringEstimate:
    """Two-sided estimates of N(e^{-phi}, e^{-psi}).

    lower_bound <= N <= upper_even = 2^n lower_bound, and N <= upper_infc, N <= upper_ginf.
    """

    n: int
    lower_bound: float
    upper_even: float
    upper_infc: float
    upper_ginf: float
    lp_value: float | None = None
    greedy_value: float | None = None
    slack: float | None = None
    grid: dict[str, Any] | None = None
    exact: bool = True

    def estimate(self) -> tuple[float, str]:
        """Best single value: the LP optimum if known, else the geometric mean of the sandwich."""
        if self.lp_value is not None:
            return self.lp_value, "lp"
        return math.sqrt(self.lower_bound * self.upper_even), "volume"

    def bounds(self) -> tuple[float, float]:
        """Interval known to hold N: the LP value twice, or the tightest volume bounds."""
        if self.lp_value is not None:
            return self.lp_value, self.lp_value
        uppers = [u for u in (self.upper_even, self.upper_infc, self.upper_ginf) if not math.isnan(u)]
        return self.lower_bound, min(uppers)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def covering_volume_bounds(
    phi: RadialFunction, psi: RadialFunction, spec: G.GridSpec | None = None
) -> CoveringEstimate:
    """
    Volume-ratio bounds for N(e^{-phi}, e^{-psi}).

    lower = int e^{-2 phi} / int e^{-(phi + psi)}, upper_even = 2^n lower,
    upper_infc = int e^{-(phi inf-conv psi^-)} / int e^{-2 psi^-} and
    upper_ginf = 2^n int e^{-(phi g-conv psi^-)} / int e^{-2 psi^-}.
    Pairs without a shared body go through the lattice backend.

    Raises:
        DivergenceError: If an integral is not in (0, inf)
    """
    n = phi.dim
    lattice = _LatticePair(phi, psi, spec)
    two_phi = integral_exp_power(phi, 2.0)
    lower = two_phi / _sum_integral(phi, psi, lattice)
    psi_minus = reflect(psi)
    two_psi_minus = integral_exp_power(psi_minus, 2.0)
    exact = _same_body(phi, psi)
    if _same_body(phi, psi_minus):
        infc = integral_exp(inf_conv(phi, psi_minus))
        ginf = integral_exp(g_inf_conv(phi, psi_minus))
    else:
        exact = False
        infc = lattice.integral(G.inf_convolve_grid(lattice["phi"], lattice["psi-"]))
        ginf = lattice.integral(G.g_inf_convolve_grid(lattice["phi"], lattice["psi-"]))
    estimate = CoveringEstimate(
        n=n,
        lower_bound=lower,
        upper_even=2**n * lower,
        upper_infc=infc / two_psi_minus,
        upper_ginf=2**n * ginf / two_psi_minus,
        grid=None if exact else lattice.spec.to_dict(),
        exact=exact,
    )
    logger.debug("covering bounds n=%d: %s", n, estimate)
    return estimate


# -- covering LP ---------------------------------------------------------------------------


@dataclass
class CoveringLPResult:
    """Grid covering number with its measure (masses on the lattice)."""

    value: float
    measure: np.ndarray
    method: str
    constraints: int
    spec: G.GridSpec = field(repr=False)

    def support(self, tol: float = 1e-9) -> list[tuple[list[float], float]]:
        pts = self.spec.points()
        mass = self.measure.ravel()
        keep = np.nonzero(mass > tol)[0]
        return [(pts[i].tolist(), float(mass[i])) for i in keep]

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method,
            "constraints": self.constraints,
            "grid": self.spec.to_dict(),
            "support": self.support(),
        }


def _kernel(g: G.GridFunction, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """K[i, j] = e^{-g(x_i - x_j)} for lattice index arrays rows (R, n) and cols (C, n)."""
    spec = g.spec
    origin = np.asarray(spec.origin_index())
    shape = np.asarray(spec.shape)
    diff = rows[:, None, :] - cols[None, :, :] + origin
    inside = np.all((diff >= 0) & (diff < shape), axis=-1)
    vals = np.empty(inside.shape)
    vals[inside] = g.values[tuple(diff[inside].T)]
    if np.any(~inside):
        vals[~inside] = g.evaluate((diff[~inside] - origin) * spec.h)
    with np.errstate(over="ignore"):
        return np.exp(-vals)


def _greedy(g: G.GridFunction, idx: np.ndarray, demand: np.ndarray) -> np.ndarray:
    """Place mass at the largest remaining deficit until every constraint holds."""
    deficit = demand.copy()
    mass = np.zeros(len(idx))
    while True:
        i = int(np.argmax(deficit))
        if deficit[i] <= LP_TOL * demand.max():
            return mass
        column = _kernel(g, idx, idx[i:i + 1])[:, 0]
        step = deficit[i] / column[i]
        mass[i] += step
        deficit = np.maximum(deficit - step * column, 0.0)
        deficit[i] = 0.0


def covering_lp(
    f: G.GridFunction,
    g: G.GridFunction,
    max_constraints: int = LP_MAX_CONSTRAINTS,
) -> CoveringLPResult:
    """
    Covering number of e^{-f} by translates of e^{-g} on a lattice.

    Minimizes sum_j mu_j subject to sum_j mu_j e^{-g(x_i - x_j)} >= e^{-f(x_i)} at every
    lattice point with e^{-f(x_i)} >= 1e-9, with mu supported on those points. Up to
    max_constraints points the LP is solved exactly with HiGHS; above that a greedy
    cover gives an upper bound.

    Raises:
        CoveringLPError: If n > 2, the lattices differ, some point cannot be covered
            or the instance is too large even for the greedy cover
    """
    if f.spec != g.spec:
        raise CoveringLPError("Covering LP needs both functions on one lattice")
    if f.dim > 2:
        raise CoveringLPError(f"Covering LP supports n <= 2, got n = {f.dim}")
    if not np.any(np.isfinite(g.values)):
        raise CoveringLPError("g is identically +inf")
    weights = f.weights()
    active = np.argwhere(weights >= MASS_CUTOFF)
    demand = weights[tuple(active.T)]
    count = len(active)
    if count > GREEDY_MAX_CONSTRAINTS:
        raise CoveringLPError(f"{count} constraints exceed the size limit {GREEDY_MAX_CONSTRAINTS}")
    measure = np.zeros(f.spec.shape)
    if count <= max_constraints:
        kernel = _kernel(g, active, active)
        if np.any(kernel.max(axis=1) <= 0):
            raise CoveringLPError("Some lattice points cannot be reached by any translate of e^{-g}")
        res = linprog(
            c=np.ones(count),
            A_ub=-kernel,
            b_ub=-demand,
            bounds=(0, None),
            method="highs",
        )
        if res.status != 0:
            raise CoveringLPError(f"Covering LP failed: {res.message}")
        mass, method = res.x, "lp"
    else:
        logger.warning("%d constraints exceed %d; greedy cover gives an upper bound only", count, max_constraints)
        mass, method = _greedy(g, active, demand), "greedy"
    measure[tuple(active.T)] = mass
    value = float(mass.sum())
    logger.debug("covering %s: value=%.6g over %d constraints", method, value, count)
    return CoveringLPResult(value=value, measure=measure, method=method, constraints=count, spec=f.spec)


@dataclass(frozen=True)
class SubmultiplicativityResult:
    """N(f, h) against N(f, g) N(g, h)."""

    n_fh: float
    n_fg: float
    n_gh: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.n_fh <= self.n_fg * self.n_gh * self.slack

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "holds": self.holds}


def submultiplicativity_check(
    f: G.GridFunction, g: G.GridFunction, h: G.GridFunction, slack: float = SUBMULT_SLACK
) -> SubmultiplicativityResult:
    """Compare grid covering numbers N(f, h) <= N(f, g) N(g, h) up to discretization slack."""
    result = SubmultiplicativityResult(
        n_fh=covering_lp(f, h).value,
        n_fg=covering_lp(f, g).value,
        n_gh=covering_lp(g, h).value,
        slack=slack,
    )
    if not result.holds:
        logger.warning("sub-multiplicativity fails: %s", result)
    return result


# -- functional inequalities ---------------------------------------------------------------


def rs_ratio(phi: RadialFunction, spec: G.GridSpec | None = None) -> float:
    """int e^{-(phi g-conv phi^-)} / int e^{-phi}; at most 8^n."""
    phi_minus = reflect(phi)
    if _same_body(phi, phi_minus):
        return integral_exp(g_inf_conv(phi, phi_minus)) / integral_exp(phi)
    lattice = _LatticePair(phi, phi, spec)
    num = lattice.integral(G.g_inf_convolve_grid(lattice["phi"], lattice["phi-"]))
    return num / lattice.integral(lattice["phi"])


def km_square_check(phi: RadialFunction) -> tuple[float, float, float]:
    """
    (int e^{-2 phi}, int e^{-phi}, 2^n int e^{-2 phi}), which must be nondecreasing.

    Raises:
        InequalityViolationError: If the chain fails beyond rounding
    """
    a = integral_exp_power(phi, 2.0)
    b = integral_exp(phi)
    c = 2**phi.dim * a
    if a > b * (1 + INEQ_RTOL) or b > c * (1 + INEQ_RTOL):
        raise InequalityViolationError(f"int e^(-2 phi) <= int e^(-phi) <= 2^n int e^(-2 phi) fails: {(a, b, c)}")
    return a, b, c


@dataclass
class EvenReduction:
    """Factors of the chain that reduces covering duality to even functions.

    N(e^{-phi}, e^{-psi}) <= N(e^{-phi_e}, e^{-psi_e}) <= phi_factor * N(e^{-phi}, e^{-psi}) * psi_factor
    with phi_e = phi g-conv phi^- and psi_e = psi + psi^-; each factor is bounded by the
    8^n times volume ratio recorded next to it.
    """

    n: int
    phi_factor: float
    phi_factor_bound: float
    psi_factor: float
    psi_factor_bound: float
    monotone_gap: float
    exact: bool

    @property
    def constant(self) -> float:
        """Measured C with phi_factor * psi_factor = C^n."""
        return (self.phi_factor * self.psi_factor) ** (1.0 / self.n)

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "constant": self.constant}


def even_reduction_check(phi: RadialFunction, psi: RadialFunction, spec: G.GridSpec | None = None) -> EvenReduction:
    """
    Evaluate the even-reduction chain for a pair.

    monotone_gap is the least value of min(phi - phi_e, psi_e - psi) over the sample
    lattice, which is >= 0 when the monotonicity step applies.

    Raises:
        InequalityViolationError: If a factor exceeds its bound
    """
    n = phi.dim
    scale = 2**n
    big = 8**n
    phi_m, psi_m = reflect(phi), reflect(psi)
    lattice = _LatticePair(phi, psi, spec)
    pts = lattice.spec.points()
    exact = _same_body(phi, phi_m) and _same_body(psi, psi_m)
    if exact:
        phi_e = g_inf_conv(phi, phi_m)
        psi_e = add(psi, psi_m)
        int_phi_e, int_2phi_e = integral_exp(phi_e), integral_exp_power(phi_e, 2.0)
        int_psi_e, int_2psi_e = integral_exp(psi_e), integral_exp_power(psi_e, 2.0)
        with np.errstate(invalid="ignore"):
            gaps = np.concatenate([phi(pts) - phi_e(pts), psi_e(pts) - psi(pts)])
    else:
        phi_e_g = G.g_inf_convolve_grid(lattice["phi"], lattice["phi-"])
        psi_e_g = G.add(lattice["psi"], lattice["psi-"])
        int_phi_e, int_2phi_e = lattice.integral(phi_e_g), lattice.integral(phi_e_g, 2.0)
        int_psi_e, int_2psi_e = lattice.integral(psi_e_g), lattice.integral(psi_e_g, 2.0)
        with np.errstate(invalid="ignore"):
            gaps = np.concatenate(
                [(lattice["phi"].values - phi_e_g.values).ravel(), (psi_e_g.values - lattice["psi"].values).ravel()]
            )
    gaps = gaps[~np.isnan(gaps)]
    report = EvenReduction(
        n=n,
        phi_factor=scale * int_2phi_e / integral_exp_power(phi, 2.0),
        phi_factor_bound=big * int_phi_e / integral_exp(phi),
        psi_factor=scale * integral_exp_power(psi, 2.0) / int_2psi_e,
        psi_factor_bound=big * integral_exp(psi) / int_psi_e,
        monotone_gap=float(gaps.min()) if gaps.size else 0.0,
        exact=exact,
    )
    tol = 1 + (INEQ_RTOL if exact else 1e-3)
    if report.phi_factor > report.phi_factor_bound * tol or report.psi_factor > report.psi_factor_bound * tol:
        raise InequalityViolationError(f"even reduction factors exceed their bounds: {report}")
    return report


# -- duality -------------------------------------------------------------------------------


@dataclass
class DualityReport:
    """Primal N(e^{-phi}, e^{-psi}) against dual N(e^{-A psi}, e^{-A phi})."""

    n: int
    alpha: float
    primal: CoveringEstimate
    dual: CoveringEstimate
    primal_estimate: float
    dual_estimate: float
    source: str
    ratio: float
    ratio_lo: float
    ratio_hi: float

    @property
    def measured(self) -> bool:
        """True when both covering numbers come from the lattice LP."""
        return self.source == "lp"

    @property
    def corridor(self) -> float:
        """ratio^{1/n}; the measured constant of the two-sided duality bound, nan when unmeasured."""
        return self.ratio ** (1.0 / self.n)

    @property
    def corridor_bounds(self) -> tuple[float, float]:
        return self.ratio_lo ** (1.0 / self.n), self.ratio_hi ** (1.0 / self.n)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "primal": self.primal.to_dict(),
            "dual": self.dual.to_dict(),
            "primal_estimate": self.primal_estimate,
            "dual_estimate": self.dual_estimate,
            "source": self.source,
            "ratio": self.ratio,
            "ratio_bounds": [self.ratio_lo, self.ratio_hi],
            "corridor": self.corridor,
            "measured": self.measured,
        }


def _check_centered(phi: RadialFunction, dual: RadialFunction, name: str, tol: float) -> None:
    for candidate in (phi, dual):
        try:
            if np.linalg.norm(barycenter(candidate)) <= tol:
                return
        except ArithmeticError:
            continue
    raise PreconditionError(f"Neither {name} nor its polarity transform has barycenter at 0")


def duality_experiment(
    phi: RadialFunction,
    psi: RadialFunction,
    alpha: float | None = None,
    lp_spec: G.GridSpec | None = None,
    check_barycenter: bool = True,
    lp_max_constraints: int = LP_MAX_CONSTRAINTS,
) -> DualityReport:
    """
    Compare covering numbers before and after the scaled polarity transform.

    Args:
        phi: Covered function
        psi: Covering function
        alpha: Scaling parameter, n^2 when omitted
        lp_spec: Lattice for grid LP estimates (n <= 2); volume bounds only when omitted
        check_barycenter: Require bar(e^{-phi}) = 0 or bar(e^{-A phi}) = 0, and the same for psi
        lp_max_constraints: Passed to covering_lp

    Only LP values on both sides give a ratio; otherwise ratio is nan and
    ratio_lo, ratio_hi bracket it from the volume bounds.

    Raises:
        PreconditionError: If the barycenter condition fails
    """
    n = phi.dim
    alpha = float(n * n if alpha is None else alpha)
    a_phi = transform_radial(phi, "polarity", alpha)
    a_psi = transform_radial(psi, "polarity", alpha)
    if check_barycenter:
        _check_centered(phi, a_phi, "phi", BARYCENTER_TOL)
        _check_centered(psi, a_psi, "psi", BARYCENTER_TOL)
    primal = covering_volume_bounds(phi, psi)
    dual = covering_volume_bounds(a_psi, a_phi)
    if lp_spec is not None and n <= 2:
        for est, (f, g) in ((primal, (phi, psi)), (dual, (a_psi, a_phi))):
            fg = G.sample(f, lp_spec, leak_tol=1.0)
            gg = G.sample(g, lp_spec, leak_tol=1.0)
            res = covering_lp(fg, gg, lp_max_constraints)
            if res.method == "lp":
                est.lp_value = res.value
            else:
                est.greedy_value = res.value
            est.grid = lp_spec.to_dict()
    p_val, p_src = primal.estimate()
    d_val, d_src = dual.estimate()
    source = p_src if p_src == d_src else f"{p_src}/{d_src}"
    p_lo, p_hi = primal.bounds()
    d_lo, d_hi = dual.bounds()
    report = DualityReport(
        n=n,
        alpha=alpha,
        primal=primal,
        dual=dual,
        primal_estimate=p_val,
        dual_estimate=d_val,
        source=source,
        ratio=p_val / d_val if source == "lp" else math.nan,
        ratio_lo=p_lo / d_hi,
        ratio_hi=p_hi / d_lo,
    )
    logger.info(
        "duality n=%d alpha=%g: ratio=%.6g in [%.6g, %.6g] (%s)",
        n, alpha, report.ratio, report.ratio_lo, report.ratio_hi, source,
    )
    return report

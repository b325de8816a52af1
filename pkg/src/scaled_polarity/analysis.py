"""Analysis of h_alpha, the threshold rho_n and the maximal ratio lambda_n(alpha).

h_alpha(z) = alpha e^{z - alpha/z} / z^{n+2} governs which capped norms
psi_{K,r,t0} maximize the ratio int e^{-J^l_alpha phi} / int e^{-phi}. The
ratio of psi_{K,r,t0} does not depend on K and is available in closed form as
sigma(n, alpha, r, t0), so lambda_n(alpha) is a two-parameter maximization over
[0, 1] x [z1, z2], where z1 < z2 are the first two roots of h_alpha = 1/n!.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np
from scipy.optimize import bisect, minimize_scalar
from scipy.special import gammainc, gammaln

from .errors import OptimizationStagnationError, PreconditionError, RootFindingError

logger = logging.getLogger(__name__)

ROOT_XTOL = 1e-12
ROOT_MAXITER = 200
SCAN_SIZE = 256
REFINE_TOL = 1e-10
REFINE_MAX_ROUNDS = 200
# Relative slack so that alpha computed as rho_n (n+2)^2 lands in the exact regime.
THRESHOLD_RTOL = 1e-9


# -- h_alpha ----------------------------------------------------------------------


def _check_n_alpha(n: int, alpha: float) -> None:
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    if not alpha > 0:
        raise PreconditionError(f"alpha must be positive, got {alpha}")


def log_h(n: int, alpha: float, z):
    """log h_alpha(z) = log alpha + z - alpha/z - (n+2) log z."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise PreconditionError("h_alpha is defined for z > 0")
    with np.errstate(divide="ignore", over="ignore"):
        return math.log(alpha) + z - alpha / z - (n + 2) * np.log(z)


def h_eval(n: int, alpha: float, z: float) -> tuple[float, float]:
    """
    Value and derivative of h_alpha at z.

    h'(z) = h(z) (1 + alpha/z^2 - (n+2)/z); both are computed from log h, so
    the value underflows to 0 near z = 0 instead of producing nan.
    """
    _check_n_alpha(n, alpha)
    value = float(np.exp(log_h(n, alpha, z)))
    return value, value * (1.0 + alpha / z**2 - (n + 2) / z)


def h_critical_points(n: int, alpha: float) -> tuple[float, float] | None:
    """Roots zeta1 < zeta2 of h_alpha', or None when alpha >= (n+2)^2/4."""
    _check_n_alpha(n, alpha)
    disc = 1.0 - 4.0 * alpha / (n + 2) ** 2
    if disc <= 0:
        return None
    zeta2 = (n + 2) / 2.0 * (1.0 + math.sqrt(disc))
    # alpha / zeta2 avoids the cancellation in (n+2)/2 (1 - sqrt(disc))
    return alpha / zeta2, zeta2


@dataclass(frozen=True)
class OneCrossing:
    """h_alpha - lambda changes sign once, at z0."""

    z0: float
    kind: str = field(default="one_crossing", init=False)

    @property
    def roots(self) -> tuple[float, ...]:
        return (self.z0,)


@dataclass(frozen=True)
class ThreeRoots:
    """h_alpha < lambda on (0, z1) and (z2, z3), > lambda on (z1, z2) and (z3, inf)."""

    z1: float
    z2: float
    z3: float
    kind: str = field(default="three_roots", init=False)

    @property
    def roots(self) -> tuple[float, ...]:
        return (self.z1, self.z2, self.z3)


SignPattern = OneCrossing | ThreeRoots


def _log_bisect(g: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of g(log z) on [log lo, log hi], returned as z."""
    try:
        s = bisect(
            lambda s: g(math.exp(s)), math.log(lo), math.log(hi),
            xtol=ROOT_XTOL, maxiter=ROOT_MAXITER,
        )
    except (RuntimeError, ValueError) as e:
        raise RootFindingError(f"Bisection failed on [{lo:g}, {hi:g}]: {e}")
    return math.exp(s)


def _bracket_down(g: Callable[[float], float], start: float) -> float:
    z = start
    for _ in range(ROOT_MAXITER):
        if g(z) < 0:
            return z
        z /= 2.0
    raise RootFindingError(f"No sign change below {start:g}")


def _bracket_up(g: Callable[[float], float], start: float) -> float:
    z = start
    for _ in range(ROOT_MAXITER):
        if g(z) > 0:
            return z
        z *= 2.0
    raise RootFindingError(f"No sign change above {start:g}")


def classify_sign_pattern(n: int, alpha: float, lam: float) -> SignPattern:
    """
    Sign pattern of h_alpha - lam.

    OneCrossing iff alpha >= (n+2)^2/4, h(zeta1) <= lam or h(zeta2) >= lam;
    otherwise one root on each monotone branch (0, zeta1), (zeta1, zeta2),
    (zeta2, inf).

    Raises:
        RootFindingError: If bisection does not bracket or converge
    """
    _check_n_alpha(n, alpha)
    if not lam > 0:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    log_lam = math.log(lam)

    def g(z: float) -> float:
        return float(log_h(n, alpha, z)) - log_lam

    crit = h_critical_points(n, alpha)
    if crit is None:
        lo, hi = _bracket_down(g, 1.0), _bracket_up(g, 1.0)
        return OneCrossing(_log_bisect(g, lo, hi))
    zeta1, zeta2 = crit
    g1, g2 = g(zeta1), g(zeta2)
    logger.debug("n=%d alpha=%g: g(zeta1)=%g g(zeta2)=%g", n, alpha, g1, g2)
    if g1 <= 0:
        return OneCrossing(_log_bisect(g, zeta2, _bracket_up(g, zeta2)))
    if g2 >= 0:
        return OneCrossing(_log_bisect(g, _bracket_down(g, zeta1), zeta1))
    z1 = _log_bisect(g, _bracket_down(g, zeta1), zeta1)
    z2 = _log_bisect(g, zeta1, zeta2)
    z3 = _log_bisect(g, zeta2, _bracket_up(g, zeta2))
    return ThreeRoots(z1, z2, z3)


# -- rho_n --------------------------------------------------------------------------


def q_function(n: int, x):
    """q(x) = (1 - sqrt(1-x)) x^{-1/(n+2)} e^{sqrt(1-x)} on (0, 1]."""
    x = np.asarray(x, dtype=float)
    root = np.sqrt(1.0 - x)
    # 1 - sqrt(1-x) = x / (1 + sqrt(1-x))
    return x / (1.0 + root) * x ** (-1.0 / (n + 2)) * np.exp(root)


def rho_target(n: int) -> float:
    """(2 (n!)^{1/n} / (n+2))^{n/(n+2)}."""
    root = math.exp(gammaln(n + 1) / n)
    return (2.0 * root / (n + 2)) ** (n / (n + 2))


@lru_cache(maxsize=None)
def compute_rho(n: int) -> float:
    """The unique rho_n in (0, 1/4) with q(4 rho_n) = rho_target(n)."""
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    target = rho_target(n)
    try:
        x = bisect(lambda x: float(q_function(n, x)) - target, 1e-300, 1.0,
                   xtol=1e-15, rtol=1e-15, maxiter=ROOT_MAXITER)
    except (RuntimeError, ValueError) as e:
        raise RootFindingError(f"rho_{n} bisection failed: {e}")
    return x / 4.0


def threshold(n: int) -> float:
    """rho_n (n+2)^2, the smallest alpha of the exact regime."""
    return compute_rho(n) * (n + 2) ** 2


def is_exact_regime(n: int, alpha: float) -> bool:
    return alpha >= threshold(n) * (1.0 - THRESHOLD_RTOL)


def h_at_zeta1(n: int, alpha: float) -> float:
    """h_alpha(zeta1) through q: (2/(n+2))^n / q(4 alpha/(n+2)^2)^{n+2}."""
    _check_n_alpha(n, alpha)
    x = 4.0 * alpha / (n + 2) ** 2
    if x > 1:
        raise PreconditionError(f"zeta1 exists only for alpha <= (n+2)^2/4, got {alpha}")
    return (2.0 / (n + 2)) ** n / float(q_function(n, x)) ** (n + 2)


# -- sigma and lambda_n ---------------------------------------------------------------


def _lower_gamma(k: np.ndarray, x):
    """gamma(k, x) for integer k >= 1."""
    return gammainc(k, x) * np.exp(gammaln(k))


def sigma(n: int, alpha: float, r, t0):
    """
    Exact ratio of psi_{K,r,t0}, vectorized over r and t0.

    With p = p_{r,t0}, w0 = alpha/t0 and beta = (1-r) t0 / alpha:
      int e^{-t} p^n = gamma(n+1, t0) + e^{-t0} sum_k C(n,k) t0^{n-k} r^k k!
      JExp = sum_k C(n,k) r^{n-k} beta^k gamma(k+1, w0) + e^{-w0}
    """
    _check_n_alpha(n, alpha)
    r, t0 = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t0, dtype=float))
    if np.any((r < 0) | (r > 1)) or np.any(t0 <= 0):
        raise PreconditionError("sigma needs r in [0, 1] and t0 > 0")
    ks = np.arange(n + 1).reshape((-1,) + (1,) * r.ndim)
    binom = np.array([math.comb(n, int(k)) for k in ks.ravel()]).reshape(ks.shape)
    fact = np.exp(gammaln(ks + 1))
    w0 = alpha / t0
    beta = (1.0 - r) * t0 / alpha
    exp_int = _lower_gamma(n + 1, t0) + np.exp(-t0) * np.sum(
        binom * t0 ** (n - ks) * r**ks * fact, axis=0
    )
    jexp_int = np.sum(binom * r ** (n - ks) * beta**ks * _lower_gamma(ks + 1, w0), axis=0) + np.exp(-w0)
    out = jexp_int / exp_int
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LambdaMax:
    """Maximizer (r*, t0*) of sigma and the maximal ratio lambda_n(alpha)."""

    r: float
    t0: float
    lam: float

    def __iter__(self):
        return iter((self.r, self.t0, self.lam))


def _refine(n: int, alpha: float, r: float, t0: float, lo: float, hi: float) -> tuple[float, float, float]:
    best = float(sigma(n, alpha, r, t0))
    for round_ in range(REFINE_MAX_ROUNDS):
        previous = best
        res = minimize_scalar(lambda x: -sigma(n, alpha, x, t0), bounds=(0.0, 1.0),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            r, best = float(res.x), float(-res.fun)
        res = minimize_scalar(lambda x: -sigma(n, alpha, r, x), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            t0, best = float(res.x), float(-res.fun)
        logger.debug("refine round %d: r=%.12g t0=%.12g sigma=%.15g", round_, r, t0, best)
        if best - previous <= REFINE_TOL * max(1.0, best):
            return r, t0, best
    raise OptimizationStagnationError(
        f"Maximizer refinement did not settle after {REFINE_MAX_ROUNDS} rounds", best=(r, t0, best)
    )


def lambda_max(n: int, alpha: float) -> LambdaMax:
    """
    lambda_n(alpha) = sup of the ratio, with its maximizing (r*, t0*).

    In the exact regime (one crossing of h_alpha - 1/n!, or alpha at least the
    threshold) the answer is (1, 1, 1/n!). Otherwise sigma is scanned on a
    256 x 256 grid over [0, 1] x [z1, z2] and refined by coordinate descent.

    Raises:
        OptimizationStagnationError: If refinement does not reach its tolerance
    """
    _check_n_alpha(n, alpha)
    base = 1.0 / math.factorial(n)
    if is_exact_regime(n, alpha):
        return LambdaMax(1.0, 1.0, base)
    pattern = classify_sign_pattern(n, alpha, base)
    if isinstance(pattern, OneCrossing):
        return LambdaMax(1.0, 1.0, base)
    z1, z2 = pattern.z1, pattern.z2
    rs = np.linspace(0.0, 1.0, SCAN_SIZE)
    ts = np.linspace(z1, z2, SCAN_SIZE)
    grid = sigma(n, alpha, rs[:, None], ts[None, :])
    i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
    logger.debug("n=%d alpha=%g: scan max %.12g at r=%g t0=%g", n, alpha, grid[i, j], rs[i], ts[j])
    try:
        r, t0, lam = _refine(n, alpha, float(rs[i]), float(ts[j]), z1, z2)
    except OptimizationStagnationError as e:
        logger.warning("lambda_max(n=%d, alpha=%g): %s; best %s", n, alpha, e, e.best)
        raise
    return LambdaMax(r, t0, max(lam, base))


def inf_ratio(n: int, alpha: float) -> float:
    """inf of the ratio over integrable functions, 1 / (alpha^n lambda_n(alpha))."""
    return 1.0 / (alpha**n * lambda_max(n, alpha).lam)


def lambda_upper_bound(n: int, alpha: float) -> float:
    """h_alpha(zeta1), an upper bound for lambda_n(alpha) below the threshold."""
    return h_at_zeta1(n, alpha)


def lambda_upper_bound_explicit(n: int, alpha: float) -> float:
    """(n+2)^2 e^{2 alpha/n} (n / (e alpha))^n, which dominates h_alpha(zeta1)."""
    return (n + 2) ** 2 * math.exp(2.0 * alpha / n) * (n / (math.e * alpha)) ** n


def lambda_lower_witness(n: int, alpha: float, t0: float) -> float:
    """Ratio of max{||.||_K, 1^inf_{alpha t0 K}}, a lower bound for lambda_n(alpha)."""
    return float(sigma(n, alpha, 0.0, alpha * t0))


def delta_from_gamma(gamma: float, n: int) -> float:
    """delta = gamma^{1/n} - 1."""
    return gamma ** (1.0 / n) - 1.0


# -- pivot construction -------------------------------------------------------------------


def pivot_construction(psi: Callable[[float], float], z1: float, z2: float, z3: float) -> tuple[float, float, float]:
    """
    Match a concave increasing psi with a scaled capped radius a p_{r,t0}.

    a = psi(z1)/z1 and b = (psi(z3) - psi(z2)) / (z3 - z2) are the slopes of the
    chord from 0 and of the chord over [z2, z3]; r = b/a and t0 is where the
    lines a t and psi(z2) + b (t - z2) meet (z1 when b = a).

    Raises:
        PreconditionError: If the points are not ordered or psi(z1) = 0
    """
    if not 0 < z1 < z2 < z3:
        raise PreconditionError(f"Need 0 < z1 < z2 < z3, got {(z1, z2, z3)}")
    p1, p2, p3 = float(psi(z1)), float(psi(z2)), float(psi(z3))
    a = p1 / z1
    if a <= 0:
        raise PreconditionError("psi vanishes on [0, z1]; no pivot exists")
    b = (p3 - p2) / (z3 - z2)
    if math.isclose(a, b, rel_tol=1e-12):
        return a, 1.0, z1
    t0 = (p2 - b * z2) / (a - b)
    return a, b / a, t0


def capped_radius(r: float, t0: float):
    """p_{r,t0}(t) = min{t, r t + (1-r) t0} as a vectorized callable."""
    return lambda t: np.minimum(t, r * np.asarray(t, dtype=float) + (1.0 - r) * t0)


# -- regime report -------------------------------------------------------------------


@dataclass
class RegimeReport:
    """Where (n, alpha) sits relative to the threshold and what was measured there."""

    n: int
    alpha: float
    rho_n: float
    threshold: float
    lam: float
    r_star: float
    t0_star: float
    gamma: float
    regime: str
    delta: float
    inf_ratio: float
    measured_c: float
    measured_C: float
    verdicts: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def regime_report(n: int, alpha: float) -> RegimeReport:
    """
    Assemble rho_n, lambda_n(alpha) and gamma = lambda alpha^n / n!.

    measured_c = n (gamma - 1) and measured_C = gamma / (n^1.5 e^{2 alpha/n}) are
    the per-point constants; sweeps report their min and max.
    """
    _check_n_alpha(n, alpha)
    rho = compute_rho(n)
    best = lambda_max(n, alpha)
    fact = math.factorial(n)
    gamma = best.lam * alpha**n / fact
    exact = is_exact_regime(n, alpha)
    if exact:
        verdicts = {"lambda_equals_base": abs(best.lam * fact - 1.0) <= 1e-8}
    else:
        verdicts = {
            "gamma_above_one": gamma > 1.0,
            "below_h_zeta1": best.lam <= lambda_upper_bound(n, alpha) * (1.0 + 1e-9),
            "tight_hypothesis": alpha > 1.0,
        }
    return RegimeReport(
        n=n,
        alpha=float(alpha),
        rho_n=rho,
        threshold=rho * (n + 2) ** 2,
        lam=best.lam,
        r_star=best.r,
        t0_star=best.t0,
        gamma=gamma,
        regime="exact" if exact else "tight",
        delta=delta_from_gamma(gamma, n),
        inf_ratio=1.0 / (alpha**n * best.lam),
        measured_c=n * (gamma - 1.0),
        measured_C=gamma / (n**1.5 * math.exp(2.0 * alpha / n)),
        verdicts=verdicts,
    )

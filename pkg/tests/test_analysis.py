import math

import numpy as np
import pytest

from scaled_polarity import analysis as A
from scaled_polarity.bodies import Ball
from scaled_polarity.errors import PreconditionError
from scaled_polarity.radial import make_psi, santalo_ratio

CAPPED_RATIO = (0.5 - math.exp(-2.0) / 2.0) / (1.0 - math.exp(-1.0))


def test_h_eval_value_and_critical_points():
    value, deriv = A.h_eval(1, 2.0, 2.0)
    assert value == pytest.approx(math.e / 8.0)
    assert deriv == pytest.approx(0.0, abs=1e-12)
    assert A.h_eval(1, 2.0, 1.0)[1] == pytest.approx(0.0, abs=1e-12)
    assert A.h_critical_points(1, 2.0) == pytest.approx((1.0, 2.0))


def test_h_eval_underflows_near_zero():
    value, deriv = A.h_eval(3, 5.0, 1e-4)
    assert value == 0.0
    assert deriv == 0.0


def test_no_critical_points_for_large_alpha():
    assert A.h_critical_points(1, 2.25) is None
    assert A.h_critical_points(2, 10.0) is None


def test_one_crossing_above_first_critical_value():
    pattern = A.classify_sign_pattern(1, 2.0, 1.0)
    assert isinstance(pattern, A.OneCrossing)
    assert pattern.z0 == pytest.approx(3.91, abs=0.01)
    assert A.h_eval(1, 2.0, pattern.z0)[0] == pytest.approx(1.0, rel=1e-9)


def test_three_roots_below_threshold():
    pattern = A.classify_sign_pattern(1, 1.0, 1.0)
    assert isinstance(pattern, A.ThreeRoots)
    z1, z2, z3 = pattern.roots
    assert 0 < z1 < z2 < z3
    for z in pattern.roots:
        assert A.h_eval(1, 1.0, z)[0] == pytest.approx(1.0, rel=1e-9)


def test_sign_pattern_matches_threshold():
    thr = A.threshold(1)
    assert isinstance(A.classify_sign_pattern(1, 0.99 * thr, 1.0), A.ThreeRoots)
    assert isinstance(A.classify_sign_pattern(1, 1.01 * thr, 1.0), A.OneCrossing)


def test_rho_one():
    assert A.compute_rho(1) == pytest.approx(0.1718, abs=2e-3)
    assert A.threshold(1) == pytest.approx(9 * A.compute_rho(1))
    assert A.threshold(1) == pytest.approx(1.546, abs=0.02)


@pytest.mark.parametrize("n", range(1, 11))
def test_rho_solves_defining_equation(n):
    rho = A.compute_rho(n)
    assert 0 < rho < 0.25
    assert float(A.q_function(n, 4 * rho)) == pytest.approx(A.rho_target(n), rel=1e-10)


@pytest.mark.parametrize("n", range(1, 7))
def test_threshold_equivalence(n):
    thr = A.threshold(n)
    base = 1.0 / math.factorial(n)
    assert A.h_at_zeta1(n, 1.01 * thr) <= base
    assert A.h_at_zeta1(n, 0.99 * thr) > base


def test_sigma_at_r_one_is_norm_ratio():
    for n in (1, 2, 3):
        values = A.sigma(n, 1.3, 1.0, np.array([0.2, 1.0, 4.0]))
        assert values == pytest.approx([1.0 / math.factorial(n)] * 3, rel=1e-12)


def test_sigma_matches_exact_pipeline():
    assert A.sigma(1, 2.0, 0.0, 1.0) == pytest.approx(CAPPED_RATIO, rel=1e-12)
    for r, t0 in ((0.25, 0.7), (0.6, 2.0)):
        exact = santalo_ratio(make_psi(Ball(2), r, t0), 1.5)
        assert A.sigma(2, 1.5, r, t0) == pytest.approx(exact, rel=1e-10)


def test_sigma_rejects_out_of_range_parameters():
    with pytest.raises(PreconditionError):
        A.sigma(1, 1.0, 1.5, 1.0)
    with pytest.raises(PreconditionError):
        A.sigma(1, -1.0, 0.5, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lambda_in_exact_regime(n):
    best = A.lambda_max(n, 2.0 * A.threshold(n))
    assert best.r == 1.0
    assert best.lam == pytest.approx(1.0 / math.factorial(n), abs=1e-8)


def test_lambda_below_threshold():
    r, t0, lam = A.lambda_max(1, 1.0)
    assert 1.0 < lam <= 2.0
    assert r < 1.0
    assert lam <= A.lambda_upper_bound(1, 1.0) * (1 + 1e-9)
    assert lam >= A.lambda_lower_witness(1, 1.0, 1.0) - 1e-9


def test_upper_bounds_are_ordered():
    for n in (1, 2, 3):
        alpha = 0.5 * A.threshold(n)
        assert A.lambda_upper_bound(n, alpha) <= A.lambda_upper_bound_explicit(n, alpha)


def test_regime_report_tight():
    report = A.regime_report(1, 1.2)
    assert report.regime == "tight"
    assert report.gamma > 1.0
    assert report.delta == pytest.approx(report.gamma - 1.0)
    assert report.inf_ratio == pytest.approx(1.0 / (1.2 * report.lam))
    assert all(report.verdicts.values())
    assert set(report.to_dict()) >= {"rho_n", "threshold", "lam", "gamma", "verdicts"}


def test_regime_report_exact():
    report = A.regime_report(2, 20.0)
    assert report.regime == "exact"
    assert report.lam == pytest.approx(0.5, abs=1e-8)
    assert report.verdicts == {"lambda_equals_base": True}


def test_pivot_construction_matches_capped_radius():
    psi = A.capped_radius(0.5, 2.0)
    a, r, t0 = A.pivot_construction(psi, 1.0, 3.0, 4.0)
    assert a == pytest.approx(1.0)
    assert r == pytest.approx(0.5)
    assert t0 == pytest.approx(2.0)
    assert A.pivot_construction(lambda t: 3.0 * t, 1.0, 2.0, 3.0) == pytest.approx((3.0, 1.0, 1.0))


def test_pivot_construction_needs_ordered_points():
    with pytest.raises(PreconditionError):
        A.pivot_construction(math.sqrt, 2.0, 1.0, 3.0)


def test_invalid_dimension_and_alpha():
    with pytest.raises(PreconditionError):
        A.h_eval(0, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        A.classify_sign_pattern(1, 1.0, 0.0)

import math

import numpy as np
import pytest

from scaled_polarity.bodies import Ball, Box, VPolytope, ball_volume
from scaled_polarity.errors import BodyMismatchError, DivergenceError, InvalidProfileError, PreconditionError
from scaled_polarity.profiles import Profile
from scaled_polarity.radial import (
    DegenerateLevelSet,
    RadialFunction,
    add,
    barycenter,
    even_mahler_upper_bound,
    indicator,
    integral_exp,
    integral_exp_power,
    legendre_product,
    level_inclusion_slack,
    level_set,
    mahler_product_A,
    make_psi,
    norm,
    random_radial,
    santalo_ratio,
    scale,
    transform_radial,
)

CAPPED_RATIO = (0.5 - math.exp(-2.0) / 2.0) / (1.0 - math.exp(-1.0))


def _bodies(n):
    return [Box(np.ones(n)), Ball(n), Box(np.linspace(0.5, 2.0, n))]


def test_norm_and_indicator_integrals(interval):
    assert integral_exp(norm(interval)) == pytest.approx(2.0)
    for n in (1, 2, 3):
        for body in _bodies(n):
            assert integral_exp(norm(body)) == pytest.approx(math.factorial(n) * body.volume(), rel=1e-12)
            assert integral_exp(indicator(body)) == pytest.approx(body.volume(), rel=1e-12)


def test_integral_exp_power_scales_norms():
    body = Ball(2)
    assert integral_exp_power(norm(body), 2.0) == pytest.approx(integral_exp(norm(body)) / 4.0)


def test_zero_profile_is_not_integrable(interval):
    with pytest.raises(DivergenceError):
        integral_exp(RadialFunction(interval, Profile.zero()))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 10.0])
def test_norm_ratio_is_one_over_factorial(n, alpha):
    for body in _bodies(n):
        assert santalo_ratio(norm(body), alpha) == pytest.approx(1.0 / math.factorial(n), rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_indicator_ratio_is_factorial_over_alpha_power(n):
    alpha = 3.0
    value = santalo_ratio(indicator(Ball(n)), alpha)
    assert value == pytest.approx(math.factorial(n) / alpha**n, rel=1e-12)


def test_capped_norm_ratio(interval):
    assert santalo_ratio(make_psi(interval, 0.0, 1.0), 2.0) == pytest.approx(CAPPED_RATIO, rel=1e-12)


def test_right_ratio_is_alpha_power_times_left(rng):
    phi = random_radial(2, rng)
    left = santalo_ratio(phi, 1.7, "left")
    assert santalo_ratio(phi, 1.7, "right") == pytest.approx(1.7**2 * left)
    with pytest.raises(InvalidProfileError):
        santalo_ratio(phi, 1.7, "middle")


def test_ratio_of_j_transform_is_reciprocal(rng):
    alpha = 2.0
    for _ in range(5):
        phi = random_radial(2, rng)
        twice = santalo_ratio(transform_radial(phi, "j_left", alpha), alpha)
        assert santalo_ratio(phi, alpha) * twice == pytest.approx(alpha**-2, rel=1e-9)


def test_make_psi_endpoints(interval):
    x = np.linspace(-3.0, 3.0, 25).reshape(-1, 1)
    assert np.allclose(make_psi(interval, 1.0, 2.0)(x), norm(interval)(x))
    capped = make_psi(interval, 0.0, 1.0)
    assert capped(np.array([0.5])) == pytest.approx(0.5)
    assert math.isinf(capped(np.array([1.5])))
    with pytest.raises(InvalidProfileError):
        make_psi(interval, 1.5, 1.0)


def test_transform_radial_moves_to_polar_body():
    body = Box([1.0, 1.0])
    dual = transform_radial(norm(body), "polarity", 3.0)
    assert dual.body.same_body(body.polar())
    assert dual.profile(1.0) == pytest.approx(3.0)
    legendre = transform_radial(norm(body), "legendre")
    assert legendre.profile.same_as(Profile.indicator(1.0))
    gauge = transform_radial(norm(body), "gauge_j")
    assert gauge.body is body
    assert gauge.profile.same_as(Profile.indicator(1.0))


@pytest.mark.parametrize("alpha", [0.5, 2.0, 7.0])
def test_mahler_product_examples(alpha):
    assert mahler_product_A(indicator(Ball(2)), alpha) == pytest.approx(math.pi**2, rel=1e-9)
    for n in (1, 2, 3):
        expected = (math.factorial(n) * ball_volume(n)) ** 2 / alpha**n
        assert mahler_product_A(norm(Ball(n)), alpha) == pytest.approx(expected, rel=1e-9)


def test_mahler_product_of_interval_norm(interval):
    assert mahler_product_A(norm(interval), 2.0) == pytest.approx(2.0)


@pytest.mark.parametrize("alpha", [0.5, 3.0])
def test_mahler_product_blows_up_for_off_center_intervals(alpha):
    values = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        body = VPolytope([[-eps], [2.0 - eps]])
        value = mahler_product_A(indicator(body), alpha)
        assert value == pytest.approx(2.0 * (1.0 / eps + 1.0 / (2.0 - eps)), rel=1e-9)
        values.append(value)
    assert all(b > a for a, b in zip(values, values[1:]))
    assert values[-1] > 1e4


def test_even_mahler_bound_dominates_symmetric_functions(rng):
    for n in (1, 2):
        bound = even_mahler_upper_bound(n, float(n * n))
        for _ in range(5):
            phi = random_radial(n, rng, symmetric=True)
            assert mahler_product_A(phi, float(n * n)) <= bound * (1 + 1e-12)


def test_barycenter_examples(shifted_interval):
    assert barycenter(norm(Ball(3))) == pytest.approx([0.0, 0.0, 0.0])
    assert barycenter(indicator(shifted_interval)) == pytest.approx([1.0])
    assert barycenter(norm(shifted_interval)) == pytest.approx([2.0])


def test_legendre_product(interval, shifted_interval):
    assert legendre_product(norm(interval)) == pytest.approx(4.0)
    with pytest.raises(PreconditionError):
        legendre_product(norm(shifted_interval))


def test_level_sets(interval):
    body = level_set(norm(interval), 2.0)
    assert body.volume() == pytest.approx(4.0)
    assert isinstance(level_set(norm(interval), 0.0), DegenerateLevelSet)
    assert level_set(indicator(interval), 0.0).volume() == pytest.approx(2.0)


def test_level_inclusion_holds_for_random_functions(rng):
    for _ in range(10):
        phi = random_radial(2, rng)
        for s, t in ((0.5, 0.5), (1.0, 2.0), (3.0, 0.25)):
            assert level_inclusion_slack(phi, 2.0, s, t) >= -1e-9


def test_algebra_needs_one_body(interval):
    phi = norm(interval)
    assert add(phi, phi).profile(1.0) == pytest.approx(2.0)
    assert scale(phi, 3.0).profile(1.0) == pytest.approx(3.0)
    with pytest.raises(BodyMismatchError):
        add(phi, norm(Box([2.0])))


def test_from_dict_defaults_to_norm():
    phi = RadialFunction.from_dict({"body": {"type": "ball", "dim": 2}})
    assert phi.profile.same_as(Profile.identity())
    assert RadialFunction.from_dict(phi.to_dict()).body.same_body(phi.body)

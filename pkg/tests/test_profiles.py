import math

import numpy as np
import pytest

from scaled_polarity.errors import InvalidProfileError
from scaled_polarity.profiles import (
    Profile,
    RadiusFunction,
    exp_level_integral,
    g_inf_conv_profile,
    inf_conv_profile,
    invert_profile,
    lower_gamma,
    radius_to_profile,
    transform_profile,
)
from scaled_polarity.radial import random_profile

TOL = 1e-9


def _sample_points(u: Profile) -> np.ndarray:
    return np.linspace(0.0, u.end + 3.0, 61)


def _same_values(u: Profile, v: Profile) -> bool:
    x = np.union1d(_sample_points(u), _sample_points(v))
    a, b = u(x), v(x)
    both_inf = np.isinf(a) & np.isinf(b)
    return bool(np.all(both_inf | np.isclose(a, b, rtol=1e-9, atol=1e-9)))


def test_profile_evaluates_tail_and_bounded_end():
    u = Profile([0.0, 1.0], [0.0, 0.5], 2.0)
    assert u(0.5) == pytest.approx(0.25)
    assert u(3.0) == pytest.approx(4.5)
    ind = Profile.indicator(1.0)
    assert ind(1.0) == 0.0
    assert math.isinf(ind(1.5))


def test_profile_rejects_invalid_input():
    with pytest.raises(InvalidProfileError):
        Profile([0.0, 1.0, 2.0], [0.0, 2.0, 3.0], None)
    with pytest.raises(InvalidProfileError):
        Profile([0.0, 1.0], [1.0, 2.0], 1.0)
    with pytest.raises(InvalidProfileError):
        Profile([0.0, 1.0], [0.0, -1.0], None)
    with pytest.raises(InvalidProfileError):
        Profile.from_dict({"values": [0.0]})


def test_profile_dict_round_trip():
    u = Profile([0.0, 1.0, 2.5], [0.0, 0.5, 2.0], 3.0)
    assert Profile.from_dict(u.to_dict()).same_as(u)


def test_legendre_of_identity_is_indicator():
    out = transform_profile(Profile.identity(), "legendre")
    assert out.same_as(Profile.indicator(1.0))


def test_polarity_of_identity_is_identity():
    assert transform_profile(Profile.identity(), "polarity", 1.0).same_as(Profile.identity())


def test_polarity_scales_with_alpha():
    out = transform_profile(Profile.identity(), "polarity", 3.0)
    assert out(2.0) == pytest.approx(6.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 4.0])
def test_polarity_of_indicator_is_polar_indicator(alpha):
    out = transform_profile(Profile.indicator(2.0), "polarity", alpha)
    assert out(0.0) == 0.0
    assert out(0.5) == 0.0
    assert math.isinf(out(0.75))


def test_polarity_of_zero_is_indicator_of_origin():
    out = transform_profile(Profile.zero(), "polarity")
    assert out(0.0) == 0.0
    assert math.isinf(out(1e-3))


def test_gauge_j_of_identity_is_indicator():
    assert transform_profile(Profile.identity(), "gauge_j").same_as(Profile.indicator(1.0))


def test_j_left_and_right_scalings():
    u = Profile([0.0, 1.0], [0.0, 1.0], 2.0)
    j = transform_profile(u, "gauge_j")
    left = transform_profile(u, "j_left", 2.0)
    right = transform_profile(u, "j_right", 2.0)
    x = np.linspace(0.0, 3.0, 13)
    assert np.allclose(left(x), 2.0 * j(x))
    assert np.allclose(right(x), 2.0 * j(x / 2.0))


def test_unknown_transform_is_rejected():
    with pytest.raises(InvalidProfileError, match="Supported transforms"):
        transform_profile(Profile.identity(), "fourier")
    with pytest.raises(InvalidProfileError):
        transform_profile(Profile.identity(), "polarity", 0.0)


def test_transforms_are_involutions_on_random_profiles(rng):
    for _ in range(25):
        u = random_profile(rng)
        for kind, alpha in (("legendre", 1.0), ("polarity", 2.5), ("gauge_j", 1.0)):
            twice = transform_profile(transform_profile(u, kind, alpha), kind, alpha)
            assert _same_values(twice, u), (kind, u)


def test_gauge_j_is_legendre_after_polarity(rng):
    for _ in range(25):
        u = random_profile(rng)
        j = transform_profile(u, "gauge_j")
        la = transform_profile(transform_profile(u, "polarity"), "legendre")
        al = transform_profile(transform_profile(u, "legendre"), "polarity")
        assert _same_values(j, la)
        assert _same_values(j, al)


def test_inf_convolution_examples():
    ident = Profile.identity()
    assert inf_conv_profile(ident, ident).same_as(ident)
    shifted = inf_conv_profile(ident, Profile.indicator(1.0))
    assert shifted.same_as(Profile([0.0, 1.0], [0.0, 0.0], 1.0))
    steep = Profile([0.0], [0.0], 2.0)
    assert inf_conv_profile(steep, ident).same_as(ident)


def test_g_inf_convolution_examples():
    ident = Profile.identity()
    assert g_inf_conv_profile(ident, ident).same_as(Profile([0.0], [0.0], 0.5))
    ind = Profile.indicator(1.0)
    assert g_inf_conv_profile(ind, ind).same_as(ind)


def _grid_for(*profiles: Profile) -> np.ndarray:
    return np.linspace(0.0, 2.0 * max(p.end for p in profiles) + 3.0, 121)


def test_g_inf_convolution_lies_below_both_factors(rng):
    for _ in range(25):
        u, v = random_profile(rng), random_profile(rng)
        w = g_inf_conv_profile(u, v)
        x = _grid_for(u, v)
        assert w(0.0) == 0.0
        assert np.all(w(x) <= u(x) + TOL), (u, v)
        assert np.all(w(x) <= v(x) + TOL), (u, v)


def test_inf_convolution_sandwich_on_random_profiles(rng):
    for _ in range(25):
        u, v = random_profile(rng), random_profile(rng)
        box, g = inf_conv_profile(u, v), g_inf_conv_profile(u, v)
        x = _grid_for(u, v)
        assert np.all(2.0 * g(x / 2.0) <= box(x) + TOL), (u, v)
        assert np.all(box(x) <= 2.0 * g(x) + TOL), (u, v)


def test_level_radius_examples():
    assert invert_profile(Profile.identity()).same_as(RadiusFunction.identity())
    rho = invert_profile(Profile.indicator(1.0))
    assert rho(0.0) == pytest.approx(1.0)
    assert rho(5.0) == pytest.approx(1.0)
    capped = invert_profile(Profile([0.0, 1.0], [0.0, 1.0], 2.0))
    assert capped(0.5) == pytest.approx(0.5)
    assert capped(3.0) == pytest.approx(2.0)


def test_radius_to_profile_inverts_level_radius(rng):
    for _ in range(10):
        u = random_profile(rng)
        assert _same_values(radius_to_profile(invert_profile(u)), u)


def test_zero_profile_has_no_level_radius():
    with pytest.raises(InvalidProfileError):
        invert_profile(Profile.zero())


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_exp_level_integral_of_identity(n):
    rho = RadiusFunction.identity()
    assert exp_level_integral(rho, n, "exp") == pytest.approx(math.factorial(n), rel=1e-12)
    assert exp_level_integral(rho, n, "jexp", alpha=2.5) == pytest.approx(1.0, rel=1e-12)


def test_exp_level_integral_of_constant_radius():
    assert exp_level_integral(RadiusFunction([0.0], [1.0], 0.0), 3, "exp") == pytest.approx(1.0)


def test_lower_gamma_matches_closed_forms():
    assert lower_gamma(1, 2.0) == pytest.approx(1.0 - math.exp(-2.0))
    assert lower_gamma(3, math.inf) == pytest.approx(2.0)

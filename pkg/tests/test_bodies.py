import math

import numpy as np
import pytest

from scaled_polarity.bodies import (
    Ball,
    Box,
    Ellipsoid,
    HPolytope,
    Simplex,
    VPolytope,
    get_body,
    mahler_volume,
    random_vpolytope,
)
from scaled_polarity.errors import InvalidBodyError, OriginNotInteriorError, UnsupportedShapeError


def test_gauge_examples(shifted_interval):
    assert Box([1.0, 1.0]).gauge([2.0, 1.0]) == pytest.approx(2.0)
    assert Ball(2).gauge([0.0, 0.0]) == 0.0
    assert shifted_interval.gauge([3.0]) == pytest.approx(1.0)
    assert shifted_interval.gauge([-1.0]) == pytest.approx(1.0)


def test_gauge_is_vectorized():
    values = Ball(2, 2.0).gauge(np.array([[2.0, 0.0], [0.0, 1.0], [3.0, 4.0]]))
    assert values == pytest.approx([1.0, 0.5, 2.5])


def test_support_examples(shifted_interval):
    assert Box([1.0, 1.0]).support([1.0, 1.0]) == pytest.approx(2.0)
    assert Ball(3).support([1.0, 2.0, 2.0]) == pytest.approx(3.0)
    assert shifted_interval.support([1.0]) == pytest.approx(3.0)


def test_polar_of_box_is_cross_polytope():
    polar = Box([1.0, 1.0]).polar()
    expected = VPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]])
    assert polar.same_body(expected)
    assert polar.volume() == pytest.approx(2.0)


def test_polar_of_ball_and_ellipsoid():
    assert Ball(3, 2.0).polar().radius == pytest.approx(0.5)
    e = Ellipsoid(np.diag([4.0, 1.0]))
    assert np.allclose(e.polar().matrix, np.diag([0.25, 1.0]))


def test_polar_is_an_involution_on_polytopes(rng):
    body = random_vpolytope(2, rng)
    assert body.polar().polar().same_body(body, tol=1e-8)


def test_volumes():
    assert Ball(2).volume() == pytest.approx(math.pi)
    assert Box([1.0, 1.0, 1.0]).volume() == pytest.approx(8.0)
    assert Simplex([[0, 0], [1, 0], [0, 1]]).volume() == pytest.approx(0.5)
    h = HPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1])
    assert h.volume() == pytest.approx(4.0)


def test_centroids(shifted_interval):
    assert Box([1.0, 1.0]).centroid() == pytest.approx([0.0, 0.0])
    assert Simplex([[0, 0], [1, 0], [0, 1]]).centroid() == pytest.approx([1 / 3, 1 / 3])
    assert shifted_interval.centroid() == pytest.approx([1.0])


def test_centered_simplex_has_centroid_at_origin():
    s = Simplex([[0, 0], [1, 0], [0, 1]], centered=True)
    assert s.centroid() == pytest.approx([0.0, 0.0], abs=1e-12)
    assert s.polar().volume() > 0


def test_difference_bodies():
    assert Box([1.0, 1.0]).difference_body().same_body(Box([2.0, 2.0]))
    assert Ball(2).difference_body().radius == pytest.approx(2.0)
    triangle = Simplex([[0, 0], [1, 0], [0, 1]])
    ratio = triangle.difference_body().volume() / triangle.volume()
    assert ratio == pytest.approx(math.comb(4, 2))


def test_ellipsoid_has_no_difference_body_shortcut():
    with pytest.raises(UnsupportedShapeError):
        Ellipsoid(np.eye(2)).difference_body()


def test_mahler_volume_of_cube_and_ball():
    assert mahler_volume(Box([1.0, 1.0])) == pytest.approx(8.0)
    assert mahler_volume(Ball(2)) == pytest.approx(math.pi**2)


def test_origin_must_be_interior():
    with pytest.raises(OriginNotInteriorError):
        VPolytope([[1.0], [3.0]])
    with pytest.raises(OriginNotInteriorError):
        HPolytope([[1.0], [-1.0]], [1.0, 0.0])


def test_factory_builds_every_shape():
    assert get_body({"type": "ball", "dim": 2}).shape == "ball"
    assert get_body({"type": "box", "half_widths": [1, 2]}).volume() == pytest.approx(8.0)
    assert get_body({"type": "cube", "dim": 3}).volume() == pytest.approx(8.0)
    assert get_body({"type": "vpolytope", "vertices": [[-1], [3]]}).volume() == pytest.approx(4.0)
    assert get_body({"type": "random_vpolytope", "dim": 2, "seed": 3}).dim == 2


def test_factory_round_trips_descriptors(rng):
    body = random_vpolytope(2, rng)
    assert get_body(body.to_dict()).same_body(body)


def test_factory_rejects_unknown_shapes():
    with pytest.raises(InvalidBodyError, match="Supported types"):
        get_body({"type": "torus"})
    with pytest.raises(InvalidBodyError):
        get_body({"type": "ball"})


def test_random_polytopes_contain_origin(rng):
    for n in (1, 2, 3):
        body = random_vpolytope(n, rng)
        assert body.gauge(np.zeros(n)) == 0.0
        assert body.volume() > 0

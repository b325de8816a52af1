import math

import numpy as np
import pytest

from scaled_polarity import grid as G
from scaled_polarity.bodies import Ball, Box
from scaled_polarity.errors import BodyMismatchError, GridRangeError, GridTooSmallError, InvalidProfileError
from scaled_polarity.radial import integral_exp, make_psi, norm

H = 1.0 / 64


@pytest.fixture
def line():
    return G.GridSpec.cube(1, 8.0, H)


@pytest.fixture
def abs_grid(line, interval):
    return G.sample(norm(interval), line)


def test_spec_validation():
    with pytest.raises(GridRangeError):
        G.GridSpec((0.0,), (1.0,), 0.25)
    with pytest.raises(GridRangeError):
        G.GridSpec((-1.0,), (1.1,), 0.25)
    with pytest.raises(GridRangeError):
        G.GridSpec.cube(4, 1.0, 0.5)


def test_spec_geometry():
    spec = G.GridSpec((-1.0, -2.0), (1.0, 2.0), 0.5)
    assert spec.shape == (5, 9)
    assert spec.size == 45
    assert spec.origin_index() == (2, 4)
    assert spec.points()[0] == pytest.approx([-1.0, -2.0])
    assert spec.extended().hi == pytest.approx((1.5, 3.0))


def test_sample_norm(abs_grid, line):
    assert abs_grid.value_at_origin() == 0.0
    x = line.axes()[0]
    assert np.allclose(abs_grid.values, np.abs(x))


def test_sample_gaussian_vanishes_at_origin():
    f = G.sample("gaussian", G.GridSpec.cube(2, 8.0, 0.25))
    assert f.value_at_origin() == 0.0


def test_sample_refuses_leaky_lattices(interval):
    with pytest.raises(GridTooSmallError):
        G.sample(norm(interval), G.GridSpec.cube(1, 2.0, H))


def test_integral_matches_exact_pipeline(abs_grid, interval):
    assert G.integral_grid(abs_grid) == pytest.approx(2.0, rel=1e-3)
    ball = G.sample(norm(Ball(2)), G.GridSpec.cube(2, 16.0, 0.125))
    assert G.integral_grid(ball) == pytest.approx(integral_exp(norm(Ball(2))), rel=1e-2)


def test_evaluate_extends_along_rays(abs_grid):
    values = abs_grid.evaluate(np.array([[0.5], [12.0], [-20.0]]))
    assert values == pytest.approx([0.5, 12.0, 20.0], rel=1e-9)


def test_legendre_of_norm_is_indicator(abs_grid, line):
    out = G.transform_grid(abs_grid, "legendre")
    y = line.axes()[0]
    inside = np.abs(y) <= 1.0
    assert np.allclose(out.values[inside], 0.0, atol=2 * H)
    assert np.all(np.isinf(out.values[np.abs(y) > 1.0 + 1e-9]))


def test_legendre_of_gaussian_is_gaussian():
    spec = G.GridSpec.cube(1, 8.0, H)
    f = G.sample("gaussian", spec)
    out = G.transform_grid(f, "legendre")
    mask = np.abs(spec.axes()[0]) <= 4.0
    assert np.allclose(out.values[mask], f.values[mask], atol=H)


def test_polarity_of_cube_norm_is_cross_norm():
    spec = G.GridSpec.cube(2, 4.0, 0.25)
    f = G.sample(norm(Box([1.0, 1.0])), spec, leak_tol=1.0)
    out = G.transform_grid(f, "polarity", 1.0, leak_tol=1.0)
    pts = out.spec.points()
    exact = np.abs(pts).sum(axis=1).reshape(out.spec.shape)
    mask = exact <= 3.0
    assert np.allclose(out.values[mask], exact[mask], atol=2 * spec.h)


def test_gauge_j_of_norm_is_indicator(abs_grid, line):
    out = G.transform_grid(abs_grid, "gauge_j")
    y = line.axes()[0]
    assert np.all(out.values[np.abs(y) <= 1.0] == 0.0)
    assert np.all(np.isinf(out.values[np.abs(y) > 1.0 + 2 * H]))


def test_gauge_j_of_capped_ball_norm_in_two_dimensions():
    spec = G.GridSpec.cube(2, 2.0, 1.0 / 32)
    f = G.sample(make_psi(Ball(2), 0.5, 1.0), spec, leak_tol=1.0)
    out = G.transform_grid(f, "gauge_j", out_spec=G.GridSpec.cube(2, 1.5, spec.h))
    r = np.linalg.norm(out.spec.points(), axis=1).reshape(out.spec.shape)
    inside = r <= 0.95
    assert np.all(np.isfinite(out.values[inside]))
    exact = np.maximum(0.0, 2.0 * r - 1.0)
    assert np.max(np.abs(out.values[inside] - exact[inside])) <= 2 * spec.h
    assert np.all(np.isinf(out.values[r >= 1.1]))


def test_polarity_block_size_does_not_change_values(monkeypatch):
    f = G.sample(norm(Ball(2)), G.GridSpec.cube(2, 3.0, 0.25), leak_tol=1.0)
    reference = G.transform_grid(f, "polarity", 2.0, leak_tol=1.0)
    monkeypatch.setattr(G, "POLARITY_BLOCK", 50)
    small = G.transform_grid(f, "polarity", 2.0, leak_tol=1.0)
    assert np.allclose(small.values, reference.values, rtol=1e-12, atol=0.0)


def test_unknown_grid_transform(abs_grid):
    with pytest.raises(InvalidProfileError, match="Unsupported grid transform"):
        G.transform_grid(abs_grid, "gauge_k")


def test_level_inclusion_on_gaussian():
    f = G.sample("gaussian", G.GridSpec.cube(1, 8.0, 1.0 / 16))
    for alpha, s, t in ((1.0, 1.0, 1.0), (2.0, 0.5, 3.0)):
        result = G.level_inclusion_check(f, alpha, s, t)
        assert result.holds
        assert result.checked_points > 0


def test_convexity(abs_grid):
    assert G.is_convex(abs_grid)
    bumpy = G.GridFunction(abs_grid.spec, np.sqrt(abs_grid.values))
    assert not G.is_convex(bumpy)


def test_mass_region_and_sup_distance(abs_grid):
    region = G.mass_region(abs_grid, 0.99)
    assert region[abs_grid.spec.origin_index()]
    assert region.sum() < region.size
    shifted = G.GridFunction(abs_grid.spec, abs_grid.values + 0.25)
    assert G.sup_distance(abs_grid, shifted) == pytest.approx(0.25)


def test_inf_convolution_of_norms(abs_grid):
    out = G.inf_convolve_grid(abs_grid, abs_grid)
    assert np.allclose(out.values, abs_grid.values)


def test_algebra_needs_one_lattice(abs_grid):
    other = G.sample("gaussian", G.GridSpec.cube(1, 8.0, 1.0 / 32))
    with pytest.raises(BodyMismatchError):
        G.add(abs_grid, other)
    assert np.allclose(G.reflect(abs_grid).values, abs_grid.values)


def test_dumps(abs_grid, tmp_path):
    f = G.GridFunction(abs_grid.spec, np.where(abs_grid.values > 4.0, np.inf, abs_grid.values))
    back = G.from_binary(G.to_binary(f, tmp_path / "f.bin"))
    assert back.spec == f.spec
    assert np.array_equal(back.values, f.values)
    lines = G.to_csv(f, tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x1,value"
    assert lines[1].endswith(",inf")
    assert len(lines) == f.spec.size + 1


def test_from_binary_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + bytes(32))
    with pytest.raises(GridRangeError):
        G.from_binary(path)

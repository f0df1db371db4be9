import math

import numpy as np
import pytest

from morse_index.errors import ConfigError, MetricDegenerate
from morse_index.geometry import (
    CONSTANT_CURVATURE,
    DIRECT_PROFILE,
    METRIC2D,
    GeodesicRecord,
    ManifoldSpec,
    Metric2D,
    builtin_catalog,
    catalog_entry,
    constant_profile,
    curvature_profile,
    entry_profile,
    frame_gram,
    parallel_frame,
    rescale_profile,
    shoot_geodesic,
)

EUCLID = ManifoldSpec(METRIC2D, 2, metric=Metric2D("1", "0", "1"))
SPHERE = ManifoldSpec(METRIC2D, 2, metric=Metric2D("1", "0", "sin(x)^2"))
HALFPLANE = ManifoldSpec(METRIC2D, 2, metric=Metric2D("1/y^2", "0", "1/y^2"))
LUMPY = ManifoldSpec(METRIC2D, 2, metric=Metric2D("1 + 0.3*x^2", "0.2*sin(x*y)", "2 + cos(x)"))


def speed_drift(spec, geo):
    sq = np.array([v @ spec.metric.matrix(x) @ v for x, v in zip(geo.position, geo.velocity)])
    return np.max(np.abs(sq - geo.speed**2)) / geo.speed**2


def test_euclidean_geodesic_is_a_line():
    geo = shoot_geodesic(EUCLID, (0.0, 0.0), (1.0, 2.0), 200)
    assert geo.speed == pytest.approx(math.sqrt(5.0))
    assert np.allclose(geo.position, np.outer(geo.grid, [1.0, 2.0]), atol=1e-13)


def test_equator_stays_on_equator():
    geo = shoot_geodesic(SPHERE, (math.pi / 2, 0.0), (0.0, 1.0), 1000)
    assert geo.speed == pytest.approx(1.0)
    assert np.max(np.abs(geo.position[:, 0] - math.pi / 2)) <= 1e-8
    assert np.allclose(geo.position[:, 1], geo.grid, atol=1e-12)


def test_halfplane_vertical_ray():
    geo = shoot_geodesic(HALFPLANE, (0.0, 1.0), (0.0, 1.0), 1000)
    assert np.all(geo.position[:, 0] == 0.0)
    # unit-speed vertical geodesic of the half-plane: y = e^t
    assert np.max(np.abs(geo.position[:, 1] - np.exp(geo.grid))) < 1e-12


def test_halfplane_semicircle():
    # unit-speed geodesic on the unit semicircle: (tanh s, sech s)
    geo = shoot_geodesic(HALFPLANE, (0.0, 1.0), (1.0, 0.0), 1000)
    s = geo.grid
    assert np.max(np.abs(geo.position - np.c_[np.tanh(s), 1 / np.cosh(s)])) < 1e-12


@pytest.mark.parametrize("spec, start, direction", [
    (SPHERE, (1.0, 0.3), (0.7, 1.9)),
    (HALFPLANE, (0.2, 0.8), (1.3, -0.4)),
    (LUMPY, (0.3, 0.2), (1.5, -0.7)),
])
def test_speed_conservation(spec, start, direction):
    geo = shoot_geodesic(spec, start, direction, 1000)
    assert speed_drift(spec, geo) <= 1e-8


def test_rk4_order():
    c = 2.0
    errs = []
    for steps in (40, 80):
        geo = shoot_geodesic(HALFPLANE, (0.0, 1.0), (0.0, c), steps)
        errs.append(abs(geo.position[-1, 1] - math.exp(c)))
    assert 12.0 <= errs[0] / errs[1] <= 20.0


def test_metric_degenerate():
    spec = ManifoldSpec(METRIC2D, 2, metric=Metric2D("x", "0", "1"))
    with pytest.raises(MetricDegenerate):
        shoot_geodesic(spec, (-1.0, 0.0), (1.0, 0.0), 100)


def test_exact_mode_rejects_callables():
    with pytest.raises(ConfigError):
        Metric2D(lambda x, y: 1.0, lambda x, y: 0.0, lambda x, y: 1.0)


def test_flat_frame_is_constant():
    geo = parallel_frame(EUCLID, shoot_geodesic(EUCLID, (0.0, 0.0), (1.0, 2.0), 200))
    assert np.allclose(geo.frame, geo.frame[0], atol=1e-14)
    assert np.allclose(geo.frame[0] @ [1.0, 2.0], 0.0, atol=1e-14)


def test_equator_frame_is_polar_direction():
    geo = parallel_frame(SPHERE, shoot_geodesic(SPHERE, (math.pi / 2, 0.0), (0.0, 1.0), 1000))
    assert np.allclose(np.abs(geo.frame[:, 0, :]), [1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("spec, start, direction", [
    (HALFPLANE, (0.0, 1.0), (0.0, 1.0)),
    (HALFPLANE, (0.2, 0.8), (1.3, -0.4)),
    (LUMPY, (0.3, 0.2), (1.5, -0.7)),
])
def test_frame_orthonormal(spec, start, direction):
    geo = parallel_frame(spec, shoot_geodesic(spec, start, direction, 1000))
    assert np.max(np.abs(frame_gram(spec, geo) - np.eye(2))) <= 1e-7


def test_constant_curvature_profile():
    c = 2.5 * math.pi
    spec = ManifoldSpec(CONSTANT_CURVATURE, 2, 1.0)
    s = curvature_profile(spec, GeodesicRecord.with_speed(c))
    assert s.n_normal == 1
    assert s(0.37)[0, 0] == pytest.approx(c * c, rel=1e-15)
    flat = curvature_profile(ManifoldSpec(CONSTANT_CURVATURE, 4, 0.0), GeodesicRecord.with_speed(3.0))
    assert flat.n_normal == 3 and not flat.many(np.linspace(0, 1, 11)).any()


def test_halfplane_profile_is_minus_one():
    geo = parallel_frame(HALFPLANE, shoot_geodesic(HALFPLANE, (0.0, 1.0), (0.0, 1.0), 1000))
    s = curvature_profile(HALFPLANE, geo)
    assert np.allclose(s.many(np.linspace(0, 1, 101)), -1.0, atol=1e-12)


@pytest.mark.parametrize("g22, k", [
    ("(exp(x) + exp(-x))^2/4", lambda x, y: -1.0),  # K = -f''/f with f = cosh
    ("x^2", lambda x, y: 0.0),                  # polar coordinates
    ("(2 + sin(x))^2", lambda x, y: np.sin(x) / (2 + np.sin(x))),
])
def test_brioschi_surface_of_revolution(g22, k):
    m = Metric2D("1", "0", g22)
    x = np.linspace(0.5, 2.0, 7)
    y = np.linspace(-1.0, 1.0, 7)
    assert np.allclose(m.gaussian_curvature(x, y), k(x, y), atol=1e-12)


def test_brioschi_conformal_metric():
    # g = e^{2 phi} I with phi = 0.1 (x^2 + y^2): K = -e^{-2 phi} (phi_xx + phi_yy)
    m = Metric2D("exp(0.2*(x^2 + y^2))", "0", "exp(0.2*(x^2 + y^2))")
    x, y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    expected = -np.exp(-0.2 * (x**2 + y**2)) * 0.4
    assert np.allclose(m.gaussian_curvature(x, y), expected, atol=1e-12)


def test_brioschi_off_diagonal_metric():
    # linear change of coordinates of the plane: flat
    m = Metric2D("2", "1", "3")
    assert np.allclose(m.gaussian_curvature(np.array([0.1, 5.0]), np.array([2.0, -1.0])), 0.0)


def test_fd_mode_matches_exact_mode():
    exact = Metric2D("1", "0.1*sin(x*y)", "(2 + sin(x))^2")
    fd = Metric2D("1", "0.1*sin(x*y)", "(2 + sin(x))^2", derivatives="fd")
    x = np.linspace(0.3, 1.5, 9)
    y = np.linspace(-0.4, 0.8, 9)
    assert np.allclose(fd.gaussian_curvature(x, y), exact.gaussian_curvature(x, y), atol=1e-6)
    assert np.allclose(fd.christoffel((0.4, 0.2)), exact.christoffel((0.4, 0.2)), atol=1e-9)


def test_catalog_contents():
    names = {e.name: e for e in builtin_catalog()}
    assert names["sphere-constcurv"].spec.kappa == 1.0
    assert "halfplane-metric2d" in names
    assert {"flat", "hyperbolic-constcurv", "sphere-metric2d"} <= set(names)
    with pytest.raises(ConfigError):
        catalog_entry("torus")


@pytest.mark.parametrize("closed, numeric, length", [
    ("sphere-constcurv", "sphere-metric2d", 2.5 * math.pi),
    ("hyperbolic-constcurv", "halfplane-metric2d", 1.7),
])
def test_cross_pipeline_agreement(closed, numeric, length):
    xs = np.linspace(0.0, 1.0, 101)
    a, _ = entry_profile(catalog_entry(closed), length)
    b, _ = entry_profile(catalog_entry(numeric), length)
    assert np.max(np.abs(a.many(xs) - b.many(xs))) <= 1e-6


def test_catalog_profiles_symmetric():
    xs = np.linspace(0.0, 1.0, 33)
    for entry in builtin_catalog(dim=4):
        s, _ = entry_profile(entry)
        m = s.many(xs)
        assert np.array_equal(m, np.swapaxes(m, 1, 2))


def test_rescale_profile():
    s = constant_profile([[8.0]])
    assert not rescale_profile(s, 0.0).many(np.linspace(0, 1, 5)).any()
    assert rescale_profile(s, 1.0)(0.3)[0, 0] == 8.0
    assert rescale_profile(s, 0.5)(0.9)[0, 0] == pytest.approx(2.0)
    ramp = ManifoldSpec(DIRECT_PROFILE, profile=constant_profile(np.eye(2))).profile
    assert rescale_profile(ramp, 0.5).n_normal == 2
    with pytest.raises(ValueError):
        rescale_profile(s, 1.5)

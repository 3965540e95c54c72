import math

import numpy as np
import pytest

from coliseum.core import GeneratorSystem, RandomModel
from coliseum.iteration import Disk, EscapeParams, PointCloud, julia_backward_cloud
from coliseum.markov import Raster, t_raster
from coliseum.verify import (Annulus, admissible_exponent, check_backward_self_similarity,
                             check_disjoint_preimages, check_fixed_point, check_global_hoelder,
                             check_level_order, check_open_set_condition, check_range_full,
                             chordal_distance, julia_band, level_order_stability,
                             median_nn_distance, run_battery, t_evaluator)

from .conftest import DC1_BBOX


def corrupt(cloud, frac=0.1, shift=0.2, seed=0):
    rng = np.random.default_rng(seed)
    pts = cloud.points.copy()
    idx = rng.choice(pts.size, int(frac * pts.size), replace=False)
    pts[idx] += shift * np.exp(2j * np.pi * rng.random(idx.size))
    return PointCloud(pts, provenance=cloud.provenance)


def test_self_similarity_circle(circle):
    c = julia_backward_cloud(circle, 20_000, rng_seed=0)
    r = check_backward_self_similarity(circle, c, tol=1e-4)
    assert r.passed and r.value < 1e-4


def test_self_similarity_dc1_and_corrupted(dc1, dc1_cloud):
    r = check_backward_self_similarity(dc1, dc1_cloud)
    assert r.passed
    assert r.threshold == pytest.approx(3 * median_nn_distance(dc1_cloud.points))
    bad = check_backward_self_similarity(dc1, corrupt(dc1_cloud))
    assert not bad.passed


def test_disjoint_preimages(dc1, dc1_cloud, two_attractors):
    r = check_disjoint_preimages(dc1, dc1_cloud)
    assert r.passed and r.value > 0
    # J of {z^2, z^2/4} is the annulus 1 <= |z| <= 4; the pieces meet on |z| = 2
    c = julia_backward_cloud(two_attractors, 20_000, rng_seed=0)
    r = check_disjoint_preimages(two_attractors, c)
    assert not r.passed
    with pytest.raises(ValueError):
        check_disjoint_preimages(GeneratorSystem.from_coeffs([[0, 0, 1]]), c)


def test_two_attractors_cloud_fills_annulus(two_attractors):
    c = julia_backward_cloud(two_attractors, 20_000, rng_seed=0)
    y = np.log(np.abs(c.points)) / math.log(4)
    assert y.min() >= -1e-9 and y.max() <= 1 + 1e-9
    # log-radius is uniform on [0, 1]
    hist, _ = np.histogram(y, bins=10, range=(0, 1))
    assert hist.min() > 0.8 * hist.mean()


def test_open_set_condition(dc1):
    r = check_open_set_condition(dc1, Annulus(Disk(0, 0.4), filled=(1, 40)))
    assert r.passed
    sq = GeneratorSystem.from_coeffs([[0, 0, 1]])
    assert check_open_set_condition(sq, Annulus(Disk(0, 0.5), 2.0)).passed
    s = GeneratorSystem.from_coeffs([[0, 0, 1], [0, 0, 0, 0, 1]])
    assert not check_open_set_condition(s, Annulus(Disk(0, 0.9), 1.1)).passed


def test_fixed_point_dc1_and_flip(dc1_raster_256, dc1_model, dc1_params):
    r = check_fixed_point(dc1_raster_256, dc1_model, dc1_params)
    assert r.passed
    T = dc1_raster_256.copy()
    z = T.centers()
    i, j = np.unravel_index(np.argmin(np.abs(z - 0.1)), z.shape)
    T.lo[i, j] = T.hi[i, j] = 1.0
    assert not check_fixed_point(T, dc1_model, dc1_params).passed


def test_fixed_point_constant_one():
    s = GeneratorSystem.from_coeffs([[-6, 0, 1], [19, -10, 1]])
    m = RandomModel(s)
    p = EscapeParams.for_system(s, max_depth=40)
    T = t_raster(m, p, (-3, 8, -3, 3), 48)
    r = check_fixed_point(T, m, p)
    assert r.passed and r.value == 0


def test_level_order_dc1(dc1_raster_512):
    assert check_level_order(dc1_raster_512, 0.25, 0.75).passed
    bad = check_level_order(dc1_raster_512, 0.75, 0.25)
    assert not bad.passed and bad.value > 0
    with pytest.raises(ValueError):
        check_level_order(dc1_raster_512, -0.1, 0.5)


def test_level_order_radial(two_attractors):
    m = RandomModel(two_attractors)
    p = EscapeParams.for_system(two_attractors, [Disk(0, 0.5)])
    T = t_raster(m, p, (-4.5, 4.5, -4.5, 4.5), 256)
    for t1, t2 in [(0.05, 0.1), (0.1, 0.2), (0.2, 0.9), (0.6, 0.61)]:
        assert check_level_order(T, t1, t2).passed


def test_level_order_stability(dc1_model, dc1_params):
    rep = level_order_stability(dc1_model, dc1_params, DC1_BBOX, [64, 128, 256], 0.25, 0.75,
                                0.02, 20)
    assert rep.passed and rep.details["stable_from"] in (64, 128, 256)


def test_range(dc1_raster_512, circle):
    assert check_range_full(dc1_raster_512).passed
    s = GeneratorSystem.from_coeffs([[-6, 0, 1], [19, -10, 1]])
    T = t_raster(RandomModel(s), EscapeParams.for_system(s, max_depth=40), (-3, 8, -3, 3), 64)
    assert not check_range_full(T).passed
    m = RandomModel(circle)
    T = t_raster(m, EscapeParams.for_system(circle, [Disk(0, 0.5)]), (-2, 2, -2, 2), 128)
    r = check_range_full(T)
    assert not r.passed


def test_julia_band_empty_on_constant():
    T = Raster((-1, 1, -1, 1), np.ones((20, 20)), np.ones((20, 20)))
    assert not julia_band(T).any()


def test_chordal_distance():
    assert chordal_distance(0, 1) == pytest.approx(math.sqrt(2))
    assert chordal_distance(1j, 1j) == 0
    d = chordal_distance(np.array([0.0, 3.0]), np.array([1e9, -3.0]))
    assert np.all((0 <= d) & (d <= 2))


def test_global_hoelder(dc1_model, dc1_params, dc1_cloud):
    t_adm = admissible_exponent(dc1_model, dc1_cloud)
    assert t_adm > 0
    ev = t_evaluator(dc1_model, dc1_params, depth=20)
    r = check_global_hoelder(dc1_model, ev, dc1_cloud, pairs=500)
    assert r.passed and math.isfinite(r.value)
    # same Fatou component (inside the trap): no difference at all
    z = np.array([0.01, 0.2j, -0.1])
    assert np.ptp(ev(z)) == 0


def test_battery_dc1(dc1_model, dc1_params, dc1_cloud, dc1_raster_256):
    rep = run_battery(dc1_model, dc1_params, dc1_cloud, dc1_raster_256)
    names = [r.name for r in rep.results]
    assert names[0] == "backward_self_similarity" and "disjoint_preimages" in names
    assert rep.passed and rep.exit_code == 0
    assert all(": PASS" in line for line in rep.to_text().splitlines() if ":" in line)


def test_battery_expect_fail(circle):
    m = RandomModel(circle)
    p = EscapeParams.for_system(circle, [Disk(0, 0.5)])
    c = julia_backward_cloud(circle, 5000, rng_seed=0)
    T = t_raster(m, p, (-2, 2, -2, 2), 64)
    assert run_battery(m, p, c, T).exit_code != 0
    rep = run_battery(m, p, c, T, expect_fail=["range_full"])
    assert rep.exit_code == 0
    assert any(r.name == "range_full (expected fail)" for r in rep.results)


def test_checks_deterministic(dc1, dc1_cloud):
    a = check_backward_self_similarity(dc1, dc1_cloud)
    b = check_backward_self_similarity(dc1, dc1_cloud)
    assert a.value == b.value and a.line() == b.line()

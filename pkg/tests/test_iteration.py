import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coliseum.core import GeneratorSystem, Polynomial, Word, preimages
from coliseum.iteration import (Disk, EscapeParams, PointCloud, escape_radius, forward_orbit,
                                julia_backward_cloud, kernel_witness, repelling_fixed_point,
                                validate_trap)


def test_escape_radius_examples(circle, two_attractors):
    assert escape_radius(circle) == pytest.approx(2.0, rel=1e-10)
    assert escape_radius(GeneratorSystem.from_coeffs([[0, 0, 0.25]])) == pytest.approx(8.0, rel=1e-10)
    assert escape_radius(two_attractors) == pytest.approx(8.0, rel=1e-10)


def test_escape_radius_handles_higher_degree():
    # a naive ((2 + sum|a_i|)/|a_d|)^(1/(d-1)) radius fails here
    s = GeneratorSystem.from_coeffs([[0, 0, 0, -1.52, 1]])
    R = escape_radius(s)
    z = R * np.exp(2j * np.pi * np.arange(4096) / 4096)
    assert np.all(np.abs(s[0](z)) >= 2 * R * (1 - 1e-9))


coef = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.builds(complex, coef, coef), min_size=3, max_size=6),
                min_size=1, max_size=3))
def test_doubling_contract(coeff_lists):
    lists = [c[:-1] + [c[-1] if abs(c[-1]) > 0.1 else 1.0] for c in coeff_lists]
    try:
        s = GeneratorSystem.from_coeffs(lists)
    except ValueError:
        return
    R = escape_radius(s)
    z = R * np.exp(2j * np.pi * np.random.default_rng(0).random(1000))
    for h in s:
        assert np.all(np.abs(h(z)) >= 2 * np.abs(z) * (1 - 1e-9))


def test_validate_trap_examples(circle, two_attractors, dc1):
    assert validate_trap(circle, Disk(0, 0.5))
    assert validate_trap(two_attractors, Disk(0, 0.5))
    chk = validate_trap(dc1, Disk(0, 0.4))
    assert chk.ok and chk.margin > 0.05


def test_validate_trap_failure_lists_violations(circle):
    chk = validate_trap(circle, Disk(0.9, 0.2))
    assert not chk
    assert chk.violations and chk.violations[0][:2] == (1, 1)


def test_forward_orbit_examples(circle, dc1):
    assert forward_orbit(circle, [1, 1], 2)[0] == [2, 4, 16]
    assert forward_orbit(dc1, [2], 0)[0] == [0, 0]
    assert forward_orbit(dc1, [1], 1)[0] == [1, -1]


def test_forward_orbit_escape_flag(circle):
    orbit, escaped = forward_orbit(circle, [1] * 50, 3)
    assert escaped and len(orbit) < 51


def test_cloud_on_unit_circle(circle):
    c = julia_backward_cloud(circle, 20_000, rng_seed=3)
    assert len(c) == 20_000
    assert np.max(np.abs(np.abs(c.points) - 1)) <= 1e-6


def test_cloud_on_chebyshev_segment():
    s = GeneratorSystem.from_coeffs([[-2, 0, 1]])
    c = julia_backward_cloud(s, 20_000, rng_seed=1)
    assert np.max(np.abs(c.points.imag)) <= 1e-4
    assert np.all(np.abs(c.points.real) <= 2 + 1e-4)
    # escape oracle: nothing leaves |z| <= 2 quickly, and nothing is attracted
    z = c.points[:500].real.astype(complex)
    for _ in range(40):
        z = s[0](z)
    assert np.all(np.abs(z) <= 2 + 1e-6)


def test_dc1_cloud_in_invariant_annulus(dc1, dc1_cloud):
    z = dc1_cloud.points
    assert np.all(np.abs(z) >= 0.4)
    w = z.copy()
    for _ in range(30):
        w = dc1[1](w)
    assert np.all(np.abs(w) <= 4 + 1e-9)


def test_cloud_determinism_and_threads(dc1):
    a = julia_backward_cloud(dc1, 3000, rng_seed=7, threads=1)
    b = julia_backward_cloud(dc1, 3000, rng_seed=7, threads=4)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.provenance, b.provenance)
    c = julia_backward_cloud(dc1, 3000, rng_seed=8)
    assert not np.array_equal(a.points, c.points)


def test_cloud_backward_invariance_subsample(dc1, dc1_cloud):
    # every root of h_j(w) = z for a cloud point z is near the cloud
    from scipy.spatial import cKDTree
    pts = dc1_cloud.points
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    sub = pts[:300]
    pre = np.concatenate([preimages(h, sub).ravel() for h in dc1])
    d = tree.query(np.column_stack([pre.real, pre.imag]))[0]
    # J has diameter ~9; sparse regions of a 2e4 sample leave gaps of ~0.1
    assert np.median(d) < 0.01 and d.max() < 0.2


def test_provenance_names_last_branch(dc1, dc1_cloud):
    z = dc1_cloud.points[:200]
    prov = dc1_cloud.provenance[:200]
    # z lies in h_j^{-1}(J): the image under h_j stays in the annulus
    for j in (1, 2):
        img = dc1[j - 1](z[prov == j])
        assert np.all(np.abs(img) >= 0.4 - 1e-9)
        assert np.all(np.abs(img) <= 4 + 1e-9)


def test_repelling_fixed_point():
    w = repelling_fixed_point(Polynomial((0, 0, 1)))
    assert w == pytest.approx(1.0)
    with pytest.raises(ValueError):
        # parabolic: the only fixed point has multiplier 1
        repelling_fixed_point(Polynomial((0, 1, 1)))


def test_kernel_witness_examples(two_attractors, dc1, dc1_params, dc1_cloud):
    p = EscapeParams(8.0, (Disk(0, 0.5),), max_depth=4)
    assert kernel_witness(3, two_attractors, p) == Word((1,))
    s = GeneratorSystem.from_coeffs([[-1, 0, 1]])
    fp = (1 + math.sqrt(5)) / 2
    ps = EscapeParams.for_system(s, max_depth=12)
    assert kernel_witness(fp, s, ps) is None
    p12 = EscapeParams(dc1_params.radius, dc1_params.traps, max_depth=12)
    idx = np.random.default_rng(0).choice(len(dc1_cloud), 20, replace=False)
    for z in dc1_cloud.points[idx]:
        w = kernel_witness(z, dc1, p12)
        assert w is not None
        assert p12.classify(np.array([w.apply(dc1, z)]), dc1)[0] != 0


def test_classify_and_absorbing(dc1):
    p = EscapeParams.for_system(dc1, [Disk(0, 0.4)])
    assert list(p.classify(np.array([10, 0, 1.2, np.nan]), dc1)) == [1, -1, 0, 1]
    # h1(0.5) = -0.4375 and h1(-0.4375) lies in the disk
    assert p.classify(np.array([0.5]), dc1)[0] == 0
    p2 = EscapeParams.for_system(dc1, [Disk(0, 0.4)], absorbing=(0, 40))
    assert p2.classify(np.array([0.5]), dc1)[0] == -1


def test_point_cloud_validation():
    c = PointCloud([1, 1j, -1])
    assert np.allclose(c.weights.sum(), 1)
    with pytest.raises(ValueError):
        PointCloud([1, np.inf])
    with pytest.raises(ValueError):
        PointCloud([1, 2], weights=[0.2, 0.2])
    s = c.subset([0, 2])
    assert len(s) == 2 and s.weights.sum() == pytest.approx(1)

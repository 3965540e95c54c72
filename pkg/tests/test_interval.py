from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coliseum.interval import (StaircaseModel, devils_staircase, lebesgue_singular, staircase_batch,
                               staircase_mc, staircase_value)

unit = st.floats(0, 1, allow_nan=False)


def test_cantor_examples():
    assert tuple(devils_staircase(Fraction(1, 3), depth=1)) == (0.5, 0.5)
    v = devils_staircase(Fraction(1, 4), depth=40)
    assert abs(v.lo - 1 / 3) <= 1e-9 and abs(v.hi - 1 / 3) <= 1e-9
    assert tuple(devils_staircase(-5)) == (0.0, 0.0)
    assert tuple(devils_staircase(2)) == (1.0, 1.0)


def test_width_bound():
    for x in np.random.default_rng(0).random(100):
        assert devils_staircase(float(x), depth=20).width <= 2.0 ** -19


@pytest.mark.parametrize("a", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_lebesgue_examples(a):
    assert tuple(lebesgue_singular(0.5, a)) == (a, a)
    v = lebesgue_singular(0.25, a)
    assert v.lo == pytest.approx(a * a, abs=1e-15) and v.width == 0


@settings(max_examples=100, deadline=None)
@given(unit)
def test_half_is_identity(x):
    v = lebesgue_singular(x, 0.5, depth=40)
    assert v.lo - 2.0 ** -39 <= x <= v.hi + 2.0 ** -39


@settings(max_examples=200, deadline=None)
@given(unit)
def test_cantor_functional_equation(x):
    d = 30
    v = devils_staircase(Fraction(x), d)
    a = devils_staircase(3 * Fraction(x), d)
    b = devils_staircase(3 * Fraction(x) - 2, d)
    rhs_lo, rhs_hi = 0.5 * (a.lo + b.lo), 0.5 * (a.hi + b.hi)
    gap = max(v.lo - rhs_hi, rhs_lo - v.hi, 0.0)
    assert gap <= v.width + a.width + b.width + 1e-15


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 3 ** 9), st.integers(1, 9))
def test_cantor_symmetry_on_triadics(k, n):
    x = Fraction(k, 3 ** n)
    if x > 1:
        return
    v, w = devils_staircase(x, 40), devils_staircase(1 - x, 40)
    if v.width == 0 and w.width == 0:
        assert v.lo + w.lo == 1.0


@settings(max_examples=100, deadline=None)
@given(unit, unit)
def test_cantor_monotone(x1, x2):
    x1, x2 = sorted((x1, x2))
    v, w = devils_staircase(x1, 30), devils_staircase(x2, 30)
    assert v.hi <= w.hi + 2 * max(v.width, w.width)


@pytest.mark.parametrize("a", [0.2, 0.65])
def test_lebesgue_strictly_increasing_on_dyadics(a):
    xs = [Fraction(k, 2 ** 12) for k in range(2 ** 12 + 1)]
    vals = [lebesgue_singular(x, a, depth=14) for x in xs]
    assert all(v.width == 0 for v in vals)
    assert all(u.lo < v.lo for u, v in zip(vals, vals[1:]))


def test_mc_examples():
    r = staircase_mc(1 / 3, StaircaseModel.cantor(), trials=10_000, rng_seed=1)
    assert abs(r.estimate - 0.5) <= 3 * r.stderr
    r = staircase_mc(0.5, StaircaseModel.bernoulli(0.3), trials=10_000, rng_seed=2)
    assert abs(r.estimate - 0.3) <= 3 * r.stderr
    for m in (StaircaseModel.cantor(), StaircaseModel.bernoulli(0.7)):
        assert staircase_mc(2.0, m, trials=50).estimate == 1.0


def test_mc_matches_recursion_on_random_points():
    rng = np.random.default_rng(3)
    m = StaircaseModel.bernoulli(0.3)
    bad = 0
    for k, x in enumerate(rng.random(100)):
        v = staircase_value(float(x), m, 40)
        r = staircase_mc(float(x), m, trials=4000, rng_seed=k)
        if abs(r.estimate - v.mid) > 3 * r.stderr + v.width + 1e-12:
            bad += 1
    # 3 sigma misses about 0.3% of the time; allow a few out of 100
    assert bad <= 3


def test_boundary_rays_are_invariant():
    # both families map [1, inf) into itself increasingly and (-inf, 0] into itself
    for m in (StaircaseModel.cantor(), StaircaseModel.bernoulli(0.4)):
        for s, b in m.maps:
            xs = np.linspace(1, 50, 200)
            assert np.all(s * xs + b >= xs) and np.all(np.diff(s * xs + b) > 0)
            ys = np.linspace(-50, 0, 200)
            assert np.all(s * ys + b <= 0)


def test_batch_and_validation():
    lo, hi = staircase_batch([0, 0.25, 1], StaircaseModel.cantor(), 40)
    assert lo[0] == 0 and hi[2] == 1 and lo[1] == pytest.approx(1 / 3, abs=1e-9)
    with pytest.raises(ValueError):
        StaircaseModel("bernoulli", 1.0)
    with pytest.raises(ValueError):
        StaircaseModel("tent")

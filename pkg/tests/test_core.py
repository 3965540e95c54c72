import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coliseum.core import (DEGREE_CAP, ConvergenceError, DegreeOverflowError, GeneratorSystem,
                           Polynomial, RandomModel, Word, compose, critical_points, derivative,
                           evaluate, preimages, roots, solve_batch)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def poly_strategy(min_deg=2, max_deg=6):
    return st.lists(cplx, min_size=min_deg, max_size=max_deg).flatmap(
        lambda low: st.builds(lambda lead: Polynomial(tuple(low) + (lead,)),
                              st.builds(complex, st.floats(0.25, 3), st.floats(-1, 1))))


def test_eval_examples():
    assert evaluate(Polynomial((-1, 0, 1)), 0) == -1
    assert evaluate(Polynomial((0, 0, 0.25)), 2) == 1
    h1 = compose(Polynomial((-1, 0, 1)), Polynomial((-1, 0, 1)))
    assert h1(1) == -1


def test_derivative_examples():
    assert derivative(Polynomial((0, 0, 1))).coeffs == (0, 2)
    h1 = Polynomial((0, 0, -2, 0, 1))
    assert derivative(h1).coeffs == (0, -4, 0, 4)
    assert derivative(Polynomial((0, 0, 0, 0, 1 / 64))).coeffs == (0, 0, 0, 1 / 16)


def test_compose_examples():
    z2 = Polynomial((0, 0, 1))
    assert compose(z2, z2).coeffs == (0, 0, 0, 0, 1)
    g = Polynomial((-1, 0, 1))
    assert compose(g, g).coeffs == (0, 0, -2, 0, 1)
    q = Polynomial((0, 0, 0.25))
    assert compose(q, q).coeffs == (0, 0, 0, 0, 1 / 64)


def test_compose_degree_cap():
    p = Polynomial.monomial(9)
    with pytest.raises(DegreeOverflowError):
        compose(p, p)
    assert compose(Polynomial.monomial(8), Polynomial.monomial(8)).degree == DEGREE_CAP


def test_critical_points_examples():
    assert critical_points(Polynomial((0, 0, 1))) == [(0, 1)]
    cps = critical_points(Polynomial((0, 0, -2, 0, 1)))
    assert sorted((round(c.real, 12), m) for c, m in cps) == [(-1, 1), (0, 1), (1, 1)]
    (c, m), = critical_points(Polynomial((0, 0, 0, 0, 1 / 64)))
    assert m == 3 and abs(c) < 1e-6


def test_roots_examples():
    assert sorted(r.real for r in roots(Polynomial((-1, 0, 1)))) == pytest.approx([-1, 1], abs=1e-14)
    assert sorted(r.real for r in roots(Polynomial((-4, 0, 1)))) == pytest.approx([-2, 2], abs=1e-14)
    r = sorted(roots(Polynomial((0, 0, -2, 0, 1))), key=lambda c: c.real)
    assert [abs(v - w) < 1e-7 for v, w in zip(r, [-math.sqrt(2), 0, 0, math.sqrt(2)])] == [True] * 4


@settings(max_examples=60, deadline=None)
@given(poly_strategy())
def test_roots_backward_error(p):
    for r in roots(p):
        assert abs(p(r)) <= 1e-10 * p.scale() * max(1.0, abs(r)) ** p.degree


@settings(max_examples=40, deadline=None)
@given(poly_strategy(), poly_strategy(2, 4), cplx)
def test_chain_rule(p, q, z):
    lhs = derivative(compose(p, q))(z)
    rhs = derivative(p)(q(z)) * derivative(q)(z)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(poly_strategy())
def test_critical_multiplicities_sum(p):
    assert sum(m for _, m in critical_points(p)) == p.degree - 1


def test_roots_agree_with_numpy_oracle(rng):
    for _ in range(20):
        c = rng.normal(size=6) + 1j * rng.normal(size=6)
        ours = np.sort_complex(np.array(roots(Polynomial(tuple(c)))))
        ref = np.sort_complex(np.roots(c[::-1]))
        assert np.allclose(ours, ref, atol=1e-8)


def test_solve_batch_row_independence(rng):
    C = rng.normal(size=(50, 5)) + 1j * rng.normal(size=(50, 5))
    full = solve_batch(C)
    for i in (0, 17, 49):
        assert np.array_equal(full[i], solve_batch(C[i:i + 1])[0])


def test_solve_batch_nonconvergence_raises():
    with pytest.raises(ConvergenceError):
        solve_batch(np.array([[1, 0, 0, 1.0]]), max_iter=1)


def test_preimages_shape_and_values(rng):
    h = Polynomial((0, 0, -2, 0, 1))
    t = rng.normal(size=30) + 1j * rng.normal(size=30)
    w = preimages(h, t)
    assert w.shape == (30, 4)
    assert np.allclose(h(w), t[:, None], atol=1e-10)


def test_polynomial_validation():
    assert Polynomial((1, 2, 0, 0)).coeffs == (1, 2)
    assert Polynomial(([1, 2], [0, 0], [3, -1])).coeffs == (1 + 2j, 0, 3 - 1j)
    with pytest.raises(ValueError):
        Polynomial((1, math.nan))
    with pytest.raises(ValueError):
        Polynomial((1, 2)).require_generator()


def test_generator_system_rejects_duplicates():
    with pytest.raises(ValueError, match="coincide"):
        GeneratorSystem.from_coeffs([[0, 0, 1], [0, 0, 1]])
    with pytest.raises(ValueError):
        GeneratorSystem.from_coeffs([[0, 1]])


def test_random_model_weights():
    s = GeneratorSystem.from_coeffs([[0, 0, 1], [0, 0, 0.25]])
    assert RandomModel(s).weights == (0.5, 0.5)
    RandomModel(s, (0.3, 0.7 + 5e-13))
    with pytest.raises(ValueError):
        RandomModel(s, (0.3, 0.6))
    with pytest.raises(ValueError):
        RandomModel(s, (0.0, 1.0))
    with pytest.raises(ValueError):
        RandomModel(s, (1.0,))


def test_sample_indices_frequencies():
    s = GeneratorSystem.from_coeffs([[0, 0, 1], [0, 0, 0.25]])
    m = RandomModel(s, (0.25, 0.75))
    j = m.sample_indices(np.random.default_rng(0), 100_000)
    assert abs(np.mean(j == 0) - 0.25) < 0.005


def test_word_polynomial_matches_apply():
    s = GeneratorSystem.from_coeffs([[-1, 0, 1], [0, 0, 0.25]])
    w = Word((1, 2, 1))
    z = 0.3 + 0.2j
    assert abs(w.polynomial(s)(z) - w.apply(s, z)) < 1e-12
    with pytest.raises(ValueError):
        Word((0,))
    with pytest.raises(ValueError):
        Word((3,)).check(s)


def test_roots_of_unity_symmetry():
    r = roots(Polynomial((-1, 0, 0, 0, 0, 1)))
    ang = sorted(cmath.phase(v) % (2 * math.pi) for v in r)
    assert np.allclose(np.diff(ang), 2 * math.pi / 5, atol=1e-10)

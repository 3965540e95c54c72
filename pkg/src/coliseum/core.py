"""Polynomials, generator systems and random models.

Coefficients are stored in ascending order of powers as double precision
complex numbers.  Everything here is immutable once constructed, so objects
can be shared freely between worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEGREE_CAP = 64

# fixed irrational offset for the initial circle of the root solver
_START_ANGLE = 0.4 * math.pi / math.sqrt(2.0)


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to converge."""


class DegreeOverflowError(ValueError):
    """Raised when a composition would exceed the configured degree cap."""


def _as_coeffs(coeffs: Iterable) -> tuple[complex, ...]:
    out = []
    for c in coeffs:
        if isinstance(c, (list, tuple)) and len(c) == 2:
            c = complex(float(c[0]), float(c[1]))
        out.append(complex(c))
    return tuple(out)


@dataclass(frozen=True)
class Polynomial:
    """Complex polynomial with ascending coefficients ``coeffs[k]`` of ``z**k``.

    Trailing zero coefficients are stripped.  Generators must have degree at
    least two, but lower degrees are allowed for intermediate objects such as
    derivatives; use :meth:`require_generator` to enforce the stronger rule.
    """

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        cs = list(_as_coeffs(self.coeffs))
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [0j]
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in cs):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def monomial(cls, degree: int, scale: complex = 1.0) -> "Polynomial":
        return cls((0,) * degree + (scale,))

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def leading(self) -> complex:
        return self.coeffs[-1]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def scale(self) -> float:
        """Largest coefficient modulus."""
        return max(abs(c) for c in self.coeffs)

    def require_generator(self) -> "Polynomial":
        if self.degree < 2:
            raise ValueError(f"generator must have degree >= 2, got {self.degree}")
        return self

    def __call__(self, z):
        return evaluate(self, z)

    def derivative(self) -> "Polynomial":
        return derivative(self)

    def __repr__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c != 0:
                terms.append(f"({c:g})z^{k}")
        return "Polynomial(" + (" + ".join(terms) or "0") + ")"


def evaluate(poly: Polynomial, z):
    """Horner evaluation, highest coefficient first.  Works on scalars and arrays."""
    cs = poly.coeffs
    acc = cs[-1] if np.isscalar(z) else np.full(np.shape(z), cs[-1], dtype=complex)
    for c in cs[-2::-1]:
        acc = acc * z + c
    return acc


def derivative(poly: Polynomial) -> Polynomial:
    cs = poly.coeffs
    if len(cs) == 1:
        return Polynomial((0,))
    return Polynomial(tuple(k * cs[k] for k in range(1, len(cs))))


def compose(outer: Polynomial, inner: Polynomial, cap: int = DEGREE_CAP) -> Polynomial:
    """Coefficients of ``outer(inner(z))``."""
    deg = max(outer.degree, 0) * max(inner.degree, 0)
    if deg > cap:
        raise DegreeOverflowError(f"composition degree {deg} exceeds cap {cap}")
    q = inner.array
    acc = np.array([outer.coeffs[-1]], dtype=complex)
    for c in outer.coeffs[-2::-1]:
        acc = np.convolve(acc, q)
        acc[0] += c
    return Polynomial(tuple(acc))


def _cauchy_radius(C: np.ndarray) -> np.ndarray:
    lead = np.abs(C[:, -1])
    return 1.0 + np.max(np.abs(C[:, :-1]), axis=1) / lead


def _horner_pd(C: np.ndarray, x: np.ndarray):
    """Value, derivative and absolute-value bound of each row polynomial at x.

    ``C`` has shape (N, d+1), ``x`` shape (N, d).
    """
    d = C.shape[1] - 1
    p = np.broadcast_to(C[:, d:d + 1], x.shape).astype(complex)
    dp = np.zeros_like(p)
    ax = np.abs(x)
    bound = np.broadcast_to(np.abs(C[:, d:d + 1]), x.shape).astype(float)
    for k in range(d - 1, -1, -1):
        dp = dp * x + p
        p = p * x + C[:, k:k + 1]
        bound = bound * ax + np.abs(C[:, k:k + 1])
    return p, dp, bound


def solve_batch(C, max_iter: int = 500) -> np.ndarray:
    """All roots of each row polynomial by simultaneous Aberth iteration.

    Parameters
    ----------
    C : array_like, shape (N, d+1)
        Ascending coefficients, one polynomial per row, all of degree ``d``.

    Returns
    -------
    ndarray, shape (N, d)

    Each row is iterated independently and frozen once its backward error
    reaches rounding level, so the result for a row does not depend on what
    else is in the batch.
    """
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    n, d1 = C.shape
    d = d1 - 1
    if d < 1:
        raise ValueError("degree must be at least 1")
    if np.any(C[:, -1] == 0):
        raise ValueError("leading coefficient must be nonzero")
    if d == 1:
        return (-C[:, 0] / C[:, 1])[:, None]

    radius = _cauchy_radius(C)
    angles = 2.0 * np.pi * np.arange(d) / d + _START_ANGLE
    x = radius[:, None] * 0.5 * np.exp(1j * angles)[None, :]
    active = np.ones(n, dtype=bool)
    eps = np.finfo(float).eps
    # rows stay active until every root is at backward-error level and the last step is tiny
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        p, dp, bound = _horner_pd(C[idx], xa)
        diff = xa[:, :, None] - xa[:, None, :]
        np.einsum("ijj->ij", diff)[...] = 1.0
        recip = 1.0 / diff
        np.einsum("ijj->ij", recip)[...] = 0.0
        s = recip.sum(axis=2)
        small = np.abs(p) <= 4.0 * eps * bound
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            step = ratio / (1.0 - ratio * s)
        step = np.where(small | ~np.isfinite(step), 0.0, step)
        x[idx] = xa - step
        tiny = np.abs(step) <= 1e-15 * (1.0 + np.abs(xa))
        done = np.all(small | tiny, axis=1)
        active[idx[done]] = False
    if np.any(active):
        raise ConvergenceError(f"{int(active.sum())} polynomials did not converge")
    return x


def roots(poly: Polynomial) -> list[complex]:
    """All ``degree`` roots of ``poly`` counted with multiplicity."""
    if poly.degree < 1:
        raise ValueError("roots need degree >= 1")
    r = solve_batch(poly.array[None, :])[0]
    return [complex(v) for v in r]


def preimages(poly: Polynomial, targets) -> np.ndarray:
    """Roots of ``poly(w) = t`` for each target ``t``, shape (len(targets), degree)."""
    t = np.atleast_1d(np.asarray(targets, dtype=complex))
    C = np.broadcast_to(poly.array, (t.size, len(poly.coeffs))).copy()
    C[:, 0] -= t
    return solve_batch(C)


def critical_points(poly: Polynomial, merge_tol: float = 1e-4) -> list[tuple[complex, int]]:
    """Roots of the derivative in the plane with multiplicities.

    Approximations of a multiple root scatter on a small circle; they are
    merged when closer than ``merge_tol * (1 + |z|)`` and replaced by their
    mean, which is far more accurate than any single approximation.
    """
    if poly.degree < 2:
        raise ValueError("critical points need degree >= 2")
    dpoly = derivative(poly)
    if dpoly.degree == 1:
        return [(complex(-dpoly.coeffs[0] / dpoly.coeffs[1]), 1)]
    rs = roots(dpoly)
    groups: list[list[complex]] = []
    for r in sorted(rs, key=lambda c: (round(c.real, 6), round(c.imag, 6))):
        for g in groups:
            c = sum(g) / len(g)
            if abs(r - c) <= merge_tol * (1.0 + abs(c)):
                g.append(r)
                break
        else:
            groups.append([r])
    out = []
    for g in groups:
        c = sum(g) / len(g)
        out.append((complex(round(c.real, 15) + 0.0, round(c.imag, 15) + 0.0), len(g)))
    return out


@dataclass(frozen=True)
class GeneratorSystem:
    """Ordered, pairwise distinct generators ``h_1 .. h_m``."""

    generators: tuple[Polynomial, ...]

    def __post_init__(self):
        gens = tuple(g if isinstance(g, Polynomial) else Polynomial(g) for g in self.generators)
        if not gens:
            raise ValueError("need at least one generator")
        for g in gens:
            g.require_generator()
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                if gens[i].coeffs == gens[j].coeffs:
                    raise ValueError(f"generators {i + 1} and {j + 1} coincide")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_coeffs(cls, coeff_lists: Sequence[Sequence]) -> "GeneratorSystem":
        return cls(tuple(Polynomial(c) for c in coeff_lists))

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(g.degree for g in self.generators)

    def __len__(self):
        return self.m

    def __getitem__(self, j):
        return self.generators[j]

    def __iter__(self):
        return iter(self.generators)


@dataclass(frozen=True)
class RandomModel:
    """A generator system together with selection probabilities ``p_j``."""

    system: GeneratorSystem
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights) or (1.0 / self.system.m,) * self.system.m
        if len(w) != self.system.m:
            raise ValueError("one weight per generator required")
        if any(not v > 0 for v in w):
            raise ValueError("weights must be strictly positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.system.m

    @property
    def p(self) -> np.ndarray:
        return np.array(self.weights)

    def sample_indices(self, rng: np.random.Generator, size) -> np.ndarray:
        """0-based generator indices drawn i.i.d. from the weights."""
        cdf = np.cumsum(self.weights)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right")


@dataclass(frozen=True)
class Word:
    """Finite word ``(i_1, ..., i_n)`` acting as ``h_{i_n} o ... o h_{i_1}``; 1-based."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if any(i < 1 for i in self.indices):
            raise ValueError("word indices are 1-based")

    def __len__(self):
        return len(self.indices)

    def check(self, system: GeneratorSystem) -> "Word":
        if any(i > system.m for i in self.indices):
            raise ValueError(f"word {self.indices} has an index beyond m={system.m}")
        return self

    def apply(self, system: GeneratorSystem, z):
        self.check(system)
        for i in self.indices:
            z = system[i - 1](z)
        return z

    def polynomial(self, system: GeneratorSystem) -> Polynomial:
        self.check(system)
        acc = Polynomial((0, 1))
        for i in self.indices:
            acc = compose(system[i - 1], acc)
        return acc

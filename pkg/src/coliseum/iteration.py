"""Forward orbits, escape and trap certificates, and the backward chaos game."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .core import GeneratorSystem, Polynomial, Word, derivative, evaluate, preimages, roots
from .parallel import chunked_map, derive_rngs


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) <= self.radius


def _doubling_radius(poly: Polynomial) -> float:
    # |a_d| r^d - sum_{i<d} |a_i| r^i - 2r has exactly one positive root (one sign change)
    a = [abs(c) for c in poly.coeffs]
    d = poly.degree

    def f(r):
        return a[d] * r ** d - sum(a[i] * r ** i for i in range(d)) - 2.0 * r

    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
    if f(1.0) > 0:
        return 1.0
    return brentq(f, 1.0, hi, xtol=1e-14, rtol=1e-15) * (1 + 1e-12)


def escape_radius(system: GeneratorSystem) -> float:
    """Radius ``R >= 1`` beyond which every generator at least doubles ``|z|``.

    Uses the unique positive root of ``|a_d| r^d - sum_{i<d} |a_i| r^i - 2r``,
    so ``|h_j(z)| >= 2|z|`` holds for ``|z| >= R`` by the triangle inequality.
    """
    return max(_doubling_radius(g) for g in system)


@dataclass(frozen=True)
class EscapeParams:
    """Base-case rules for escape probabilities.

    ``traps`` is a union of disks certified forward invariant (see
    :func:`validate_trap`).  The optional ``absorbing`` pair ``(k, depth)``
    adds a second stage: a point is also trapped if iterating generator
    ``k`` (0-based) lands it in a trap disk within ``depth`` steps, i.e. it is
    certified to lie in the filled Julia set of ``h_k``.  That stage is only
    sound when the filled set of ``h_k`` is known to be contained in the
    smallest filled Julia set of the semigroup.
    """

    radius: float
    traps: tuple[Disk, ...] = ()
    absorbing: tuple[int, int] | None = None
    max_depth: int = 24

    def __post_init__(self):
        object.__setattr__(self, "traps", tuple(self.traps))

    @classmethod
    def for_system(cls, system: GeneratorSystem, traps=(), **kw) -> "EscapeParams":
        return cls(radius=escape_radius(system), traps=tuple(traps), **kw)

    def in_trap(self, z, system: GeneratorSystem | None = None) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        hit = np.zeros(z.shape, dtype=bool)
        for d in self.traps:
            hit |= np.abs(z - d.center) <= d.radius
        if self.absorbing is not None and system is not None:
            k, depth = self.absorbing
            todo = ~hit & (np.abs(z) <= self.radius)
            w = z[todo]
            sub = np.zeros(w.shape, dtype=bool)
            live = np.ones(w.shape, dtype=bool)
            h = system[k]
            for _ in range(depth):
                if not live.any():
                    break
                w = np.where(live, h(w), w)
                inside = np.zeros(w.shape, dtype=bool)
                for d in self.traps:
                    inside |= np.abs(w - d.center) <= d.radius
                sub |= live & inside
                live &= ~inside & (np.abs(w) <= self.radius)
            hit[todo] = sub
        return hit

    def classify(self, z, system: GeneratorSystem | None = None) -> np.ndarray:
        """+1 escaped, -1 trapped, 0 unresolved."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=np.int8)
        esc = ~(np.abs(z) <= self.radius)  # nan/inf count as escaped
        out[esc] = 1
        trap = self.in_trap(np.where(esc, 0, z), system) & ~esc
        out[trap] = -1
        return out


@dataclass
class TrapCheck:
    ok: bool
    margin: float
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _derivative_bound(poly: Polynomial, center: complex, radius: float) -> float:
    dp = derivative(poly)
    rho = abs(center) + radius
    return sum(abs(c) * rho ** k for k, c in enumerate(dp.coeffs))


def validate_trap(system: GeneratorSystem, disks, samples: int = 4096) -> TrapCheck:
    """Certify that every generator maps each disk into the union of ``disks``.

    By the maximum principle the image of a closed disk under a polynomial is
    contained in ``D(b, r)`` as soon as the boundary circle is.  The circle is
    sampled at ``samples`` points and the gaps are covered by a Lipschitz
    margin from a bound on ``|h'|`` over the disk.

    Returns a :class:`TrapCheck` whose ``margin`` is the smallest slack found;
    on failure ``violations`` lists ``(disk index, generator index, boundary
    point)`` triples (indices 1-based).
    """
    if isinstance(disks, Disk):
        disks = (disks,)
    disks = tuple(disks)
    theta = 2.0 * np.pi * (np.arange(samples) + 0.5) / samples
    worst = math.inf
    bad = []
    for a, disk in enumerate(disks):
        circle = disk.center + disk.radius * np.exp(1j * theta)
        gap = disk.radius * math.pi / samples
        for j, h in enumerate(system):
            img = h(circle)
            lip = _derivative_bound(h, disk.center, disk.radius) * gap
            best = -math.inf
            best_arg = None
            for target in disks:
                dist = np.abs(img - target.center)
                slack = target.radius - (dist.max() + lip)
                if slack > best:
                    best = slack
                    best_arg = circle[int(np.argmax(dist))]
            worst = min(worst, best)
            if best < 0:
                bad.append((a + 1, j + 1, complex(best_arg)))
    return TrapCheck(ok=not bad, margin=float(worst), violations=bad)


def forward_orbit(system: GeneratorSystem, word: Word | Sequence[int], z: complex,
                  radius: float | None = None) -> tuple[list[complex], bool]:
    """Trajectory of ``z`` under the prefixes of ``word``.

    Stops early, returning ``escaped=True``, once the modulus exceeds
    ``radius * 2**10``.
    """
    if not isinstance(word, Word):
        word = Word(tuple(word))
    word.check(system)
    R = escape_radius(system) if radius is None else radius
    limit = R * 2.0 ** 10
    out = [complex(z)]
    for i in word.indices:
        z = complex(system[i - 1](z))
        out.append(z)
        if not abs(z) <= limit:
            return out, True
    return out, False


@dataclass
class PointCloud:
    """Weighted sample of a Julia set; ``provenance`` is the 1-based generator
    of the last inverse branch taken (0 when unknown)."""

    points: np.ndarray
    weights: np.ndarray | None = None
    provenance: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex).ravel()
        n = self.points.size
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n) if n else np.zeros(0)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.provenance is None:
            self.provenance = np.zeros(n, dtype=int)
        self.provenance = np.asarray(self.provenance, dtype=int)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("cloud points must be finite")
        if np.any(self.weights < 0) or (n and abs(self.weights.sum() - 1.0) > 1e-12):
            raise ValueError("cloud weights must be nonnegative and sum to 1")

    def __len__(self):
        return self.points.size

    def subset(self, idx) -> "PointCloud":
        w = self.weights[idx]
        return PointCloud(self.points[idx], w / w.sum(), self.provenance[idx])


def repelling_fixed_point(poly: Polynomial) -> complex:
    """The fixed point of ``poly`` with the largest multiplier, if repelling."""
    shifted = list(poly.coeffs)
    shifted[1] = shifted[1] - 1 if len(shifted) > 1 else -1
    fps = roots(Polynomial(tuple(shifted)))
    dp = derivative(poly)
    mult = [abs(dp(w)) for w in fps]
    k = int(np.argmax(mult))
    # multiple roots are only found to ~sqrt(eps), hence the slack
    if mult[k] <= 1.0 + 1e-6:
        raise ValueError("no repelling fixed point found for the seed generator")
    # a few Newton steps on poly(z) - z tighten the root
    w = fps[k]
    for _ in range(3):
        f = poly(w) - w
        w = w - f / (dp(w) - 1)
    return complex(w)


def _chaos_chain_block(system, start, rngs, steps, burn_in, cdf):
    n = len(rngs)
    m = system.m
    choice = np.empty((n, steps), dtype=int)
    pick = np.empty((n, steps))
    for c, rng in enumerate(rngs):
        u = rng.random((steps, 2))
        choice[c] = np.searchsorted(cdf, u[:, 0], side="right")
        pick[c] = u[:, 1]
    z = np.full(n, start, dtype=complex)
    kept = steps - burn_in
    pts = np.empty((n, kept), dtype=complex)
    prov = np.empty((n, kept), dtype=int)
    for s in range(steps):
        nz = np.empty_like(z)
        for j in range(m):
            sel = np.flatnonzero(choice[:, s] == j)
            if sel.size == 0:
                continue
            pre = preimages(system[j], z[sel])
            k = np.minimum((pick[sel, s] * pre.shape[1]).astype(int), pre.shape[1] - 1)
            nz[sel] = pre[np.arange(sel.size), k]
        z = nz
        if s >= burn_in:
            pts[:, s - burn_in] = z
            prov[:, s - burn_in] = choice[:, s] + 1
    return pts, prov


def julia_backward_cloud(system: GeneratorSystem, n_points: int, burn_in: int = 64,
                         rng_seed: int = 0, weights=None, n_chains: int = 256,
                         threads: int = 1, seed_point: complex | None = None) -> PointCloud:
    """Sample the Julia set of the semigroup by random inverse iteration.

    Each step picks a generator (uniformly, or by ``weights``) and then a
    uniformly random root of ``h_j(w) = z``.  ``n_chains`` independent chains
    start at a repelling fixed point of ``h_1``; chain ``c`` draws from its own
    stream spawned from ``rng_seed``, and output is concatenated in chain
    order, so the result does not depend on ``threads``.

    The cloud is reliable for hyperbolic systems; when the Julia set meets a
    parabolic or otherwise non-hyperbolic attractor it is only heuristic.
    """
    if n_points < 1:
        raise ValueError("n_points must be positive")
    start = repelling_fixed_point(system[0]) if seed_point is None else complex(seed_point)
    p = np.full(system.m, 1.0 / system.m) if weights is None else np.asarray(weights, float)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    n_chains = max(1, min(n_chains, n_points))
    per_chain = -(-n_points // n_chains)
    steps = burn_in + per_chain
    rngs = derive_rngs(rng_seed, n_chains)
    blocks = [rngs[i:i + 128] for i in range(0, n_chains, 128)]
    results = chunked_map(
        lambda rs: _chaos_chain_block(system, start, rs, steps, burn_in, cdf), blocks, threads)
    pts = np.concatenate([r[0] for r in results]).ravel()[:n_points]
    prov = np.concatenate([r[1] for r in results]).ravel()[:n_points]
    return PointCloud(pts, None, prov)


def kernel_witness(z: complex, system: GeneratorSystem, params: EscapeParams) -> Word | None:
    """Shortest word (breadth first, lexicographic) sending ``z`` out of
    the Julia set: to ``|w| > R`` or into the certified trap.

    ``None`` means no witness up to ``params.max_depth``.
    """
    level = np.array([complex(z)])
    words = [()]
    if params.classify(level, system)[0] != 0:
        return Word(())
    for _ in range(params.max_depth):
        nwords = []
        for w in words:
            for j in range(system.m):
                nwords.append(w + (j + 1,))
        imgs = np.stack([system[j](level) for j in range(system.m)], axis=1).ravel()
        cls = params.classify(imgs, system)
        hits = np.flatnonzero(cls != 0)
        if hits.size:
            return Word(nwords[int(hits[0])])
        level = imgs
        words = nwords
    return None

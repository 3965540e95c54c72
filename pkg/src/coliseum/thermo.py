"""Potential theory and thermodynamic formalism for random polynomial maps.

Green's functions of random sequences, the critical-point sum ``Omega``,
closed-form and transfer-operator Hoelder exponents, Bowen-equation
dimension, box counting, and empirical pointwise Hoelder regression.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import cKDTree

from .core import GeneratorSystem, Polynomial, RandomModel, critical_points, derivative, preimages
from .iteration import EscapeParams, PointCloud, escape_radius

# extra log-domain steps once an orbit has escaped; 2**-64 relative tail
_TAIL_STEPS = 64


# ------------------------------------------------------------------ Green's function

@dataclass
class GreenValue:
    value: float
    remainder: float      # bound on |true value - value| from the escaped tail
    bounded: bool         # orbit never left the escape disk within n_max
    steps: int

    def __float__(self):
        return self.value


def _word_indices(model: RandomModel, word, n: int) -> np.ndarray:
    """First ``n`` 0-based generator indices of ``word``.

    ``word`` is a numpy Generator (i.i.d. draws from the model weights) or an
    iterable of 1-based indices; a finite iterable is repeated cyclically.
    """
    if isinstance(word, np.random.Generator):
        return model.sample_indices(word, n)
    seq = []
    for i in word:
        seq.append(int(i) - 1)
        if len(seq) >= n:
            break
    if not seq:
        raise ValueError("empty word")
    idx = np.resize(np.array(seq), n)
    if idx.min() < 0 or idx.max() >= model.m:
        raise ValueError("word index out of range")
    return idx


def _green_along(system: GeneratorSystem, idx: np.ndarray, y: complex, n_max: int, R: float
                 ) -> GreenValue:
    z = complex(y)
    logdeg = 0.0
    for n in range(n_max):
        h = system[idx[n]]
        z = complex(h(z))
        logdeg += math.log(h.degree)
        if not abs(z) <= R:
            break
    else:
        return GreenValue(0.0, 0.0, True, n_max)
    if not math.isfinite(abs(z)):
        raise OverflowError("orbit overflowed before the log-domain switch")
    # |z| > R >= 1: log|h(z)| = d log|z| + log|a_d| + log|1 + eps|,
    # |eps| <= S / (|a_d| |z|) with S the sum of the lower coefficient moduli
    L = math.log(abs(z))
    value_terms = [L * math.exp(-logdeg)]
    remainder = 0.0
    exact = True
    for k in range(n + 1, n + 1 + _TAIL_STEPS):
        h = system[idx[k]]
        a = abs(h.leading)
        d = h.degree
        logdeg += math.log(d)
        scale = math.exp(-logdeg)
        # iterate exactly while the next value is representable
        exact = exact and d * L + math.log(a) < 690
        if exact:
            z = complex(h(z))
            L_next = math.log(abs(z))
        else:
            S = sum(abs(c) for c in h.coeffs[:-1])
            eps = S / a * math.exp(-L) if L < 700 else 0.0
            L_next = d * L + math.log(a)
            remainder += -math.log1p(-eps) * scale if eps < 1 else math.inf
        value_terms.append((L_next - d * L) * scale)
        L = L_next
    # G = L_n/D_n + sum of increments (L_{k+1} - d L_k)/D_{k+1}
    value = math.fsum(value_terms)
    # increments beyond the tail: each at most max|log|a_d|| / D_k, D_k at least doubling
    remainder += 2.0 * scale * max(abs(math.log(abs(g.leading))) for g in system)
    return GreenValue(max(value, 0.0), remainder, False, n + 1)


def green_function(model: RandomModel, word, y: complex, n_max: int = 200,
                   R: float | None = None) -> GreenValue:
    """``lim (1/deg) log+ |gamma_n o ... o gamma_1 (y)|`` along ``word``.

    Once the orbit passes the escape radius the rest of the limit is
    summed in log coordinates, with a remainder bound from the size of the
    lower-order terms.  An orbit that stays within ``R`` for ``n_max`` steps
    gives 0 with ``bounded=True``.
    """
    R = escape_radius(model.system) if R is None else R
    idx = _word_indices(model, word, n_max + _TAIL_STEPS + 1)
    return _green_along(model.system, idx, y, n_max, R)


def omega(model: RandomModel, word, n_max: int = 200, R: float | None = None) -> float:
    """Sum of the Green's function over the critical points of the first map
    of ``word``, with multiplicity."""
    R = escape_radius(model.system) if R is None else R
    idx = _word_indices(model, word, n_max + _TAIL_STEPS + 1)
    first = model.system[idx[0]]
    total = 0.0
    for c, mult in critical_points(first):
        total += mult * _green_along(model.system, idx, c, n_max, R).value
    return total


def omega_integral(model: RandomModel, samples: int = 1000, n_max: int = 200, rng_seed: int = 0
                   ) -> tuple[float, float]:
    """Monte Carlo mean of ``omega`` over i.i.d. random words, with standard error."""
    rng = np.random.default_rng(rng_seed)
    R = escape_radius(model.system)
    vals = np.array([omega(model, rng, n_max, R) for _ in range(samples)])
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(vals.mean()), se


def hoelder_entropy(model: RandomModel, omega_int: float = 0.0) -> float:
    """Closed-form exponent: entropy of ``p`` over its mean log-degree plus ``omega_int``."""
    p = np.array(model.weights)
    degs = np.array(model.system.degrees, dtype=float)
    num = -math.fsum(p * np.log(p))
    den = math.fsum(p * np.log(degs)) + omega_int
    if not den > 0:
        raise ValueError(f"nonpositive denominator {den}")
    return num / den


@dataclass
class NondiffConditions:
    a: bool
    b: bool
    c: bool
    u_entropy: float
    verdict: str

    @property
    def flags(self) -> tuple[bool, bool, bool]:
        return self.a, self.b, self.c


def postcritical_bounded(model: RandomModel, depth: int = 40, n_words: int = 64, rng_seed: int = 0,
                         R: float | None = None) -> bool:
    """Probabilistic check that all planar postcritical orbits stay bounded:
    every critical point of every generator is pushed through ``n_words``
    random words of length ``depth`` and must stay within ``R``."""
    R = escape_radius(model.system) if R is None else R
    rng = np.random.default_rng(rng_seed)
    crit = np.array([c for h in model.system for c, _ in critical_points(h)])
    z = np.repeat(crit, n_words)
    for _ in range(depth):
        j = rng.integers(0, model.m, size=z.size)
        nz = np.empty_like(z)
        for k, h in enumerate(model.system):
            sel = j == k
            nz[sel] = h(z[sel])
        z = nz
        if not np.all(np.abs(z) <= R):
            return False
    return True


def nondiff_conditions(model: RandomModel, omega_int: float | None = None, depth: int = 40,
                       n_words: int = 64, rng_seed: int = 0) -> NondiffConditions:
    p = np.array(model.weights)
    degs = np.array(model.system.degrees, dtype=float)
    a = math.fsum(p * np.log(p * degs)) > 0
    b = postcritical_bounded(model, depth, n_words, rng_seed)
    c = model.m == 2
    if omega_int is None:
        omega_int = 0.0 if b else omega_integral(model, 200, rng_seed=rng_seed)[0]
    u = hoelder_entropy(model, omega_int)
    verdict = "nondifferentiable_dense" if (a or b or c) and u < 1 else "inconclusive"
    return NondiffConditions(a, b, c, u, verdict)


# ------------------------------------------------------------------ transfer operator

def spherical_derivative(h: Polynomial, z):
    """``|h'(z)| (1 + |z|^2) / (1 + |h(z)|^2)``."""
    z = np.asarray(z, dtype=complex)
    return np.abs(derivative(h)(z)) * (1 + np.abs(z) ** 2) / (1 + np.abs(h(z)) ** 2)


def derivative_norm(h: Polynomial, z, metric: str = "spherical"):
    if metric == "spherical":
        return spherical_derivative(h, z)
    if metric == "euclidean":
        return np.abs(derivative(h)(np.asarray(z, dtype=complex)))
    raise ValueError(f"unknown metric {metric!r}")


class SparseCloudError(ValueError):
    """The cloud is too sparse for nearest-neighbour transfer."""


class TransferOperator:
    """``L_t phi(z) = sum_j sum_{h_j(w) = z} phi(w) ||h_j'(w)||^-t`` on a cloud.

    Values at the preimages ``w`` are read off the nearest cloud point, so
    ``L_t`` becomes a sparse matrix with one entry per (point, preimage).
    """

    def __init__(self, system: GeneratorSystem, cloud: PointCloud, metric: str = "spherical",
                 mesh_factor: float = 10.0):
        self.system = system
        self.cloud = cloud
        self.metric = metric
        pts = cloud.points
        n = pts.size
        xy = np.column_stack([pts.real, pts.imag])
        tree = cKDTree(xy)
        d_self, _ = tree.query(xy, k=2)
        self.mesh = float(np.median(d_self[:, 1]))
        rows, cols, logs, gens, dists = [], [], [], [], []
        for j, h in enumerate(system):
            pre = preimages(h, pts)                      # (n, d)
            w = pre.ravel()
            dist, k = tree.query(np.column_stack([w.real, w.imag]))
            rows.append(np.repeat(np.arange(n), pre.shape[1]))
            cols.append(k)
            logs.append(np.log(derivative_norm(h, w, metric)))
            gens.append(np.full(w.size, j))
            dists.append(dist)
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)
        self.logder = np.concatenate(logs)
        self.gens = np.concatenate(gens)
        self.transfer_distance = np.concatenate(dists)
        if not np.all(np.isfinite(self.logder)):
            raise ValueError("a preimage sits on a critical point; operator undefined")
        med = float(np.median(self.transfer_distance))
        if med > mesh_factor * max(self.mesh, 1e-300):
            raise SparseCloudError(
                f"median preimage-to-cloud distance {med:.3g} exceeds {mesh_factor} x mesh {self.mesh:.3g}")
        self.n = n

    def matrix(self, t: float) -> csr_matrix:
        data = np.exp(-t * self.logder)
        return csr_matrix((data, (self.rows, self.cols)), shape=(self.n, self.n))

    def power(self, t: float, iterations: int = 500, tol: float = 1e-10, transpose: bool = False):
        """Perron root and vector by power iteration with sup-norm scaling.

        Returns ``(log_rho, vector)``.
        """
        A = self.matrix(t)
        if transpose:
            A = A.T.tocsr()
        v = np.ones(self.n)
        log_rho = 0.0
        prev = math.inf
        for _ in range(iterations):
            u = A @ v
            s = u.max()
            if not s > 0:
                raise ArithmeticError("transfer operator annihilated the iterate")
            v = u / s
            log_rho = math.log(s)
            if abs(log_rho - prev) < tol:
                break
            prev = log_rho
        return log_rho, v


@dataclass
class DimensionResult:
    delta: float
    trace: list = field(default_factory=list)   # (t, log rho) pairs in evaluation order

    def __float__(self):
        return self.delta


def bowen_dimension(system: GeneratorSystem, cloud: PointCloud, t_bracket=(0.2, 1.99),
                    tol: float = 1e-3, metric: str = "spherical", iterations: int = 500,
                    operator: TransferOperator | None = None, max_bisections: int = 60
                    ) -> DimensionResult:
    """Zero of the pressure ``t -> log rho(L_t)`` by bisection."""
    op = operator or TransferOperator(system, cloud, metric)
    trace = []

    def pressure(t):
        lr, _ = op.power(t, iterations)
        trace.append((t, lr))
        return lr

    a, b = t_bracket
    fa, fb = pressure(a), pressure(b)
    if not (fa > 0 > fb):
        raise ValueError(f"bracket {t_bracket} does not straddle rho = 1 (log rho = {fa:.4g}, {fb:.4g})")
    mid = 0.5 * (a + b)
    for _ in range(max_bisections):
        mid = 0.5 * (a + b)
        fm = pressure(mid)
        if abs(fm) <= tol and b - a < 1e-3:
            break
        if fm > 0:
            a = mid
        else:
            b = mid
    return DimensionResult(mid, trace)


@dataclass
class BoxCount:
    estimate: float
    scales: np.ndarray
    counts: np.ndarray
    residual: float

    def __float__(self):
        return self.estimate


def box_counting_dim(cloud, scales: Sequence[float]) -> BoxCount:
    """Least-squares slope of ``log N(eps)`` against ``log(1/eps)``."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=complex)
    scales = np.asarray(sorted(scales, reverse=True), dtype=float)
    if scales.size < 2:
        raise ValueError("need at least two scales")
    x0, y0 = pts.real.min(), pts.imag.min()
    counts = []
    for eps in scales:
        ij = np.column_stack([np.floor((pts.real - x0) / eps), np.floor((pts.imag - y0) / eps)])
        counts.append(np.unique(ij.astype(np.int64), axis=0).shape[0])
    counts = np.array(counts)
    X = np.log(1.0 / scales)
    Y = np.log(counts)
    if np.ptp(X) == 0:
        raise ValueError("degenerate fit: identical scales")
    coef, res, *_ = np.polyfit(X, Y, 1, full=True)
    resid = float(math.sqrt(res[0] / X.size)) if res.size else 0.0
    return BoxCount(float(coef[0]), scales, counts, resid)


@dataclass
class HausdorffQuadrature:
    u: float
    numerator: float
    denominator: float
    piece_mass: np.ndarray       # rho-tilde mass of each h_j^{-1}(J) piece
    alpha: np.ndarray
    nu: np.ndarray


def hoelder_hausdorff(model: RandomModel, cloud: PointCloud, delta: float, iterations: int = 2000,
                      metric: str = "spherical", operator: TransferOperator | None = None,
                      tol: float = 1e-12) -> HausdorffQuadrature:
    """Hoelder exponent for Hausdorff-typical points via the transfer operator at ``delta``.

    ``alpha`` is the Perron vector of ``L_delta`` and ``nu`` the Perron vector
    of its adjoint; ``alpha * nu`` is the invariant measure.  Each cloud
    point belongs to the piece ``h_j^{-1}(J)`` named by its provenance, and
    the result is ``-sum_j log p_j * mass_j / sum_y (alpha nu)(y) log||h_j'(y)||``.
    """
    op = operator or TransferOperator(model.system, cloud, metric)
    prov = cloud.provenance
    if np.any(prov < 1) or np.any(prov > model.m):
        raise ValueError("cloud provenance must name a generator for every point")
    _, alpha = op.power(delta, iterations, tol)
    _, nu = op.power(delta, iterations, tol, transpose=True)
    if not np.all(alpha > 0):
        raise ArithmeticError("alpha vector not strictly positive")
    nu = nu / nu.sum()
    rho = alpha * nu
    rho = rho / rho.sum()
    logp = np.log(np.array(model.weights))
    mass = np.array([rho[prov == j + 1].sum() for j in range(model.m)])
    lognorm = np.empty(cloud.points.size)
    for j, h in enumerate(model.system):
        sel = prov == j + 1
        lognorm[sel] = np.log(derivative_norm(h, cloud.points[sel], metric))
    num = -float(np.dot(logp, mass))
    den = float(np.dot(rho, lognorm))
    if not den > 0:
        raise ArithmeticError(f"nonpositive Lyapunov denominator {den}")
    return HausdorffQuadrature(num / den, num, den, mass, alpha, nu)


# ------------------------------------------------------------------ empirical exponent

@dataclass
class HoelderFit:
    slope: float
    residual: float
    radii: np.ndarray
    oscillation: np.ndarray
    reliable: bool


def pointwise_hoelder_empirical(evaluator: Callable, z0, radii, probes_per_radius: int = 32,
                                directions=None) -> HoelderFit:
    """Slope of ``log max_{|z - z0| = r} |phi(z) - phi(z0)|`` against ``log r``.

    ``evaluator(points)`` returns ``(lo, hi)`` arrays.  Probes sit on circles
    around ``z0``; pass ``directions`` (unit complex numbers, e.g. ``(1, -1)``
    on the real line) to override.  A function that is locally constant at
    every radius returns ``slope = inf``.  Oscillations that do not exceed
    the interval widths make the fit unreliable.

    The exponent is predicted for points typical for the maximal-entropy
    measure; points of a backward cloud follow a different distribution, so
    individual slopes scatter and a median over many sites is the robust
    summary.
    """
    radii = np.asarray(radii, dtype=float)
    if directions is None:
        theta = 2 * np.pi * (np.arange(probes_per_radius) + 0.5) / probes_per_radius
        directions = np.exp(1j * theta)
    directions = np.asarray(directions, dtype=complex)
    probes = z0 + radii[:, None] * directions[None, :]
    lo, hi = evaluator(np.concatenate([[z0], probes.ravel()]))
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    diff = np.abs(mid[1:] - mid[0]).reshape(probes.shape)
    noise = (half[1:] + half[0]).reshape(probes.shape)
    M = diff.max(axis=1)
    Mnoise = noise.max(axis=1)
    if np.all(M <= Mnoise):
        reliable = bool(np.all(Mnoise == 0))
        return HoelderFit(math.inf, 0.0, radii, M, reliable)
    good = M > Mnoise
    reliable = bool(good.sum() >= max(2, radii.size // 2) and np.all(M[good] > 4 * Mnoise[good]))
    if good.sum() < 2:
        return HoelderFit(math.nan, math.nan, radii, M, False)
    X = np.log(radii[good])
    Y = np.log(M[good])
    coef, res, *_ = np.polyfit(X, Y, 1, full=True)
    resid = float(math.sqrt(res[0] / X.size)) if res.size else 0.0
    return HoelderFit(float(coef[0]), resid, radii, M, reliable)


def auto_box_scales(cloud, points_per_box: float = 32.0, coarse_fraction: float = 1 / 8,
                    n_scales: int = 8) -> np.ndarray:
    """Geometric scales from ``coarse_fraction`` of the cloud diameter down to
    the size where occupied boxes hold about ``points_per_box`` points on
    average.  Finer boxes are undersampled and bias the slope low."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=complex)
    diam = max(np.ptp(pts.real), np.ptp(pts.imag))
    hi = diam * coarse_fraction
    x0, y0 = pts.real.min(), pts.imag.min()

    def count(eps):
        ij = np.column_stack([np.floor((pts.real - x0) / eps), np.floor((pts.imag - y0) / eps)])
        return np.unique(ij.astype(np.int64), axis=0).shape[0]

    lo = hi
    while count(lo / 1.5) < pts.size / points_per_box:
        lo /= 1.5
    if lo >= hi:
        raise ValueError("cloud too small for box counting")
    return np.geomspace(hi, lo, n_scales)


# ------------------------------------------------------------------ summary report

@dataclass
class HoelderReport:
    u_entropy: float
    u_hausdorff: float | None
    omega_integral: tuple[float, float]
    conditions: tuple[bool, bool, bool]
    verdict: str
    delta: float | None = None

    def as_dict(self) -> dict:
        a, b, c = self.conditions
        return {"u_entropy": self.u_entropy,
                "u_hausdorff": self.u_hausdorff if self.u_hausdorff is not None else math.nan,
                "omega_integral": self.omega_integral[0], "omega_stderr": self.omega_integral[1],
                "condition_a": a, "condition_b": b, "condition_c": c,
                "verdict": self.verdict,
                "delta": self.delta if self.delta is not None else math.nan}


def hoelder_report(model: RandomModel, cloud: PointCloud | None = None, samples: int = 1000,
                   n_max: int = 200, rng_seed: int = 0, metric: str = "spherical"
                   ) -> HoelderReport:
    """Both Hoelder exponents and the nondifferentiability conditions.

    The transfer-operator exponent needs a cloud with provenance; without
    one only the closed-form exponent is filled in.
    """
    om = omega_integral(model, samples, n_max, rng_seed)
    cond = nondiff_conditions(model, omega_int=om[0], rng_seed=rng_seed)
    u_h = delta = None
    if cloud is not None:
        op = TransferOperator(model.system, cloud, metric)
        delta = bowen_dimension(model.system, cloud, operator=op).delta
        u_h = hoelder_hausdorff(model, cloud, delta, operator=op).u
    return HoelderReport(cond.u_entropy, u_h, om, cond.flags, cond.verdict, delta)

"""Escape probabilities, the transition operator and minimal sets.

The function computed here is the probability that the random orbit
``z -> h_{j_1}(z) -> h_{j_2}(h_{j_1}(z)) -> ...`` (each ``j`` drawn with
probability ``p_j``) tends to infinity.  It is the unique bounded solution of
``T = sum_j p_j T o h_j`` that is 1 beyond the escape radius and 0 on the
certified trap, which is what the tree expansion below evaluates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .core import GeneratorSystem, RandomModel, derivative
from .iteration import EscapeParams
from .parallel import chunked_map, derive_rngs, split

PRUNE_MASS = 1e-6
PIXEL_CHUNK = 4096


@dataclass
class Interval:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __iter__(self):
        yield self.lo
        yield self.hi


def t_infinity_batch(zs, model: RandomModel, params: EscapeParams, depth: int | None = None,
                     prune: float = PRUNE_MASS):
    """Enclosures ``[lo, hi]`` of the escape probability at every point of ``zs``.

    The recursion ``T(z) = sum_j p_j T(h_j(z))`` is unrolled as a weighted
    tree.  Escaped leaves add their weight to ``lo``; trapped leaves add
    nothing; leaves still unresolved at ``depth``, or whose weight fell below
    ``prune``, add their weight to the slack.  Returns ``(lo, slack)`` with
    ``hi = lo + slack``.
    """
    depth = params.max_depth if depth is None else depth
    zs = np.asarray(zs, dtype=complex)
    shape = zs.shape
    n = zs.size
    z = zs.ravel().copy()
    w = np.ones(n)
    origin = np.arange(n)
    lo = np.zeros(n)
    slack = np.zeros(n)
    system = model.system
    p = model.weights
    for level in range(depth + 1):
        if z.size == 0:
            break
        cls = params.classify(z, system)
        esc = cls == 1
        if esc.any():
            lo += np.bincount(origin[esc], weights=w[esc], minlength=n)
        open_ = cls == 0
        stop = open_ & (w < prune) if level < depth else open_
        if stop.any():
            slack += np.bincount(origin[stop], weights=w[stop], minlength=n)
        keep = open_ & ~stop
        if level == depth or not keep.any():
            break
        zk, wk, ok = z[keep], w[keep], origin[keep]
        # node order: all children of generator 1, then generator 2, ...
        z = np.concatenate([system[j](zk) for j in range(system.m)])
        w = np.concatenate([wk * p[j] for j in range(system.m)])
        origin = np.tile(ok, system.m)
    return lo.reshape(shape), slack.reshape(shape)


def t_infinity_exact(z: complex, model: RandomModel, params: EscapeParams,
                     depth: int | None = None, prune: float = PRUNE_MASS) -> Interval:
    lo, slack = t_infinity_batch(np.array([z]), model, params, depth, prune)
    return Interval(float(lo[0]), float(lo[0] + slack[0]))


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    indeterminate: float
    trials: int
    flagged: bool = False

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def _random_orbits(z0, model, rng, trials, max_steps, stop):
    """Run ``trials`` random orbits from ``z0``; ``stop(z)`` returns an int
    label per point (0 = keep going).  Returns the final label of each orbit."""
    z = np.full(trials, complex(z0))
    label = np.zeros(trials, dtype=int)
    label[:] = stop(z)
    live = np.flatnonzero(label == 0)
    system = model.system
    for _ in range(max_steps):
        if live.size == 0:
            break
        j = model.sample_indices(rng, live.size)
        zl = z[live]
        nz = np.empty_like(zl)
        for k in range(system.m):
            sel = j == k
            nz[sel] = system[k](zl[sel])
        z[live] = nz
        lab = stop(nz)
        label[live] = lab
        live = live[lab == 0]
    return label


def t_infinity_mc(z: complex, model: RandomModel, params: EscapeParams, trials: int = 10_000,
                  rng_seed: int = 0, max_steps: int = 200, max_indeterminate: float = 0.01
                  ) -> MCEstimate:
    """Fraction of random orbits escaping before they hit the trap."""
    rng = np.random.default_rng(rng_seed)

    def stop(w):
        c = params.classify(w, model.system).astype(int)
        return np.where(c == 1, 1, np.where(c == -1, 2, 0))

    lab = _random_orbits(z, model, rng, trials, max_steps, stop)
    esc = int(np.count_nonzero(lab == 1))
    und = int(np.count_nonzero(lab == 0))
    est = esc / trials
    se = math.sqrt(max(est * (1 - est), 0.0) / trials)
    frac = und / trials
    return MCEstimate(est, se, frac, trials, flagged=frac > max_indeterminate)


@dataclass
class Raster:
    """Interval-valued function sampled at pixel centres.

    Row 0 is the top of the image (largest imaginary part); ``lo`` and
    ``hi`` have shape ``(ny, nx)``.
    """

    bbox: tuple[float, float, float, float]
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.bbox = tuple(float(v) for v in self.bbox)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 2:
            raise ValueError("lo and hi must be 2-d arrays of equal shape")
        if np.any(self.lo < -1e-12) or np.any(self.hi > 1 + 1e-12) or np.any(self.lo > self.hi + 1e-12):
            raise ValueError("raster cells must satisfy 0 <= lo <= hi <= 1")

    @property
    def resolution(self) -> tuple[int, int]:
        return self.lo.shape[1], self.lo.shape[0]

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def pixel_size(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.bbox
        nx, ny = self.resolution
        return (xmax - xmin) / nx, (ymax - ymin) / ny

    def centers(self) -> np.ndarray:
        return pixel_centers(self.bbox, self.resolution)

    def to_fractional(self, z):
        """Continuous (row, col) coordinates with pixel centres at integers."""
        xmin, xmax, ymin, ymax = self.bbox
        dx, dy = self.pixel_size
        col = (np.real(z) - xmin) / dx - 0.5
        row = (ymax - np.imag(z)) / dy - 0.5
        return row, col

    def copy(self) -> "Raster":
        return Raster(self.bbox, self.lo.copy(), self.hi.copy())


def pixel_centers(bbox, resolution) -> np.ndarray:
    xmin, xmax, ymin, ymax = bbox
    nx, ny = resolution
    x = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    y = ymax - (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    return x[None, :] + 1j * y[:, None]


def t_raster(model: RandomModel, params: EscapeParams, bbox, resolution, depth: int | None = None,
             threads: int = 1, prune: float = PRUNE_MASS) -> Raster:
    """Escape-probability enclosures at every pixel centre."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    zs = pixel_centers(bbox, resolution).ravel()
    chunks = split(zs.size, PIXEL_CHUNK)

    def work(sl):
        return t_infinity_batch(zs[sl], model, params, depth, prune)

    parts = chunked_map(work, chunks, threads)
    lo = np.concatenate([a for a, _ in parts])
    slack = np.concatenate([b for _, b in parts])
    nx, ny = resolution
    lo = np.clip(lo, 0.0, 1.0).reshape(ny, nx)
    hi = np.clip(lo + slack.reshape(ny, nx), 0.0, 1.0)
    return Raster(bbox, lo, hi)


@dataclass
class TransitionResult:
    raster: Raster
    modulus: np.ndarray          # per-pixel interpolation modulus
    unresolved: np.ndarray       # pixels with an off-grid, unclassified image


def _bilinear(raster: Raster, z):
    """Bilinear interpolation of lo/hi at points ``z`` plus the local
    oscillation (max hi - min lo over the surrounding 4x4 pixel block)."""
    ny, nx = raster.lo.shape
    row, col = raster.to_fractional(z)
    inside = (row >= -0.5) & (row <= ny - 0.5) & (col >= -0.5) & (col <= nx - 0.5)
    r = np.clip(row, 0, ny - 1)
    c = np.clip(col, 0, nx - 1)
    r0 = np.minimum(np.floor(r).astype(int), max(ny - 2, 0))
    c0 = np.minimum(np.floor(c).astype(int), max(nx - 2, 0))
    r1 = np.minimum(r0 + 1, ny - 1)
    c1 = np.minimum(c0 + 1, nx - 1)
    fr = r - r0
    fc = c - c0
    out = []
    corners = [(r0, c0), (r0, c1), (r1, c0), (r1, c1)]
    wts = [(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc]
    for arr in (raster.lo, raster.hi):
        acc = np.zeros(np.shape(z))
        for (a, b), wt in zip(corners, wts):
            acc = acc + wt * arr[a, b]
        out.append(acc)
    # oscillation over the 4x4 block around the cell bounds the interpolation error
    hi_c = np.full(np.shape(z), -np.inf)
    lo_c = np.full(np.shape(z), np.inf)
    for dr in (-1, 0, 1, 2):
        rr = np.clip(r0 + dr, 0, ny - 1)
        for dc in (-1, 0, 1, 2):
            cc = np.clip(c0 + dc, 0, nx - 1)
            hi_c = np.maximum(hi_c, raster.hi[rr, cc])
            lo_c = np.minimum(lo_c, raster.lo[rr, cc])
    return out[0], out[1], hi_c - lo_c, inside


def m_tau_apply(raster: Raster, model: RandomModel, params: EscapeParams | None = None,
                resolve_tol: float = 1e-3) -> TransitionResult:
    """Apply ``(M phi)(z) = sum_j p_j phi(h_j(z))`` to an interval raster.

    Images that are certified escaped or trapped take the boundary values 1
    and 0 when ``params`` is given; other in-box images are bilinearly
    interpolated.  Images leaving the box are evaluated by the tree
    recursion when ``params`` is given; those still wider than
    ``resolve_tol`` (or all of them without ``params``) are flagged and
    contribute ``[0, 1]``.
    """
    z = raster.centers()
    lo = np.zeros(z.shape)
    hi = np.zeros(z.shape)
    modulus = np.zeros(z.shape)
    unresolved = np.zeros(z.shape, dtype=bool)
    for j, h in enumerate(model.system):
        p = model.weights[j]
        wz = h(z)
        cls = params.classify(wz, model.system) if params is not None else np.zeros(z.shape, np.int8)
        ilo, ihi, osc, inside = _bilinear(raster, wz)
        vlo = np.where(cls == 1, 1.0, np.where(cls == -1, 0.0, ilo))
        vhi = np.where(cls == 1, 1.0, np.where(cls == -1, 0.0, ihi))
        interp = cls == 0
        off = interp & ~inside
        vlo = np.where(off, 0.0, vlo)
        vhi = np.where(off, 1.0, vhi)
        if params is not None and off.any():
            # off-grid images: evaluate the recursion there directly
            elo, eslack = t_infinity_batch(wz[off], model, params)
            vlo[off] = elo
            vhi[off] = elo + eslack
            off = off.copy()
            off[off] = eslack > resolve_tol
            interp = interp & inside
        unresolved |= off
        lo += p * vlo
        hi += p * vhi
        modulus += p * np.where(interp & inside, osc, 0.0)
    lo = np.clip(lo, 0.0, 1.0)
    hi = np.clip(np.maximum(hi, lo), 0.0, 1.0)
    return TransitionResult(Raster(raster.bbox, lo, hi), modulus, unresolved)


# ---------------------------------------------------------------- minimal sets

@dataclass
class Cluster:
    points: np.ndarray
    centroid: complex
    diameter: float


@dataclass
class MinimalSet:
    clusters: tuple[int, ...]     # indices into report.clusters; -1 is infinity
    period: int

    @property
    def is_infinity(self) -> bool:
        return self.clusters == (-1,)


@dataclass
class MinimalSetReport:
    clusters: list[Cluster]
    transition_graph: dict        # (k, j) -> set of k' ; k = -1 is infinity
    minimal: list[MinimalSet]
    gap: float
    includes_infinity: bool
    flags: list[str] = field(default_factory=list)

    @property
    def periods(self) -> list[int]:
        return [L.period for L in self.minimal]

    @property
    def dimension(self) -> int:
        """Sum of the periods over all minimal sets."""
        return sum(self.periods)

    def finite_points(self) -> np.ndarray:
        pts = [self.clusters[k].points for L in self.minimal for k in L.clusters if k >= 0]
        return np.concatenate(pts) if pts else np.zeros(0, dtype=complex)


def _single_linkage(pts: np.ndarray, gap: float) -> np.ndarray:
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    pairs = tree.query_pairs(gap, output_type="ndarray")
    n = pts.size
    g = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) \
        else csr_matrix((n, n))
    _, labels = connected_components(g, directed=False)
    return labels


def _period(nodes: Sequence[int], edges: dict) -> int:
    nodes = list(nodes)
    inside = set(nodes)
    level = {nodes[0]: 0}
    queue = [nodes[0]]
    g = 0
    while queue:
        u = queue.pop(0)
        for v in edges.get(u, ()):
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) or 1


def minimal_sets(model: RandomModel, seeds, burn_in: int = 200, samples: int = 200,
                 rng_seed: int = 0, params: EscapeParams | None = None,
                 gap_factor: float = 20.0, gap_floor: float = 1e-6) -> MinimalSetReport:
    """Locate the minimal sets by clustering the tails of random forward orbits.

    Clusters are linked single-linkage with threshold ``gap_factor`` times the
    median nearest-neighbour distance (at least ``gap_floor``).  The
    generator-transition graph on clusters is built by mapping each cluster
    forward; its bottom strongly connected components are the minimal sets,
    and the period of each is the gcd of its cycle lengths.
    """
    system = model.system
    if params is None:
        params = EscapeParams.for_system(system)
    R = params.radius
    seeds = np.asarray(seeds, dtype=complex).ravel()
    rngs = derive_rngs(rng_seed, seeds.size)
    flags = []
    z = seeds.copy()
    escaped = ~(np.abs(z) <= R)
    tail = np.full((seeds.size, samples), np.nan + 0j)
    choices = np.stack([model.sample_indices(r, burn_in + samples) for r in rngs]) \
        if seeds.size else np.zeros((0, burn_in + samples), int)
    for s in range(burn_in + samples):
        nz = z.copy()
        for k in range(system.m):
            sel = (choices[:, s] == k) & ~escaped
            nz[sel] = system[k](z[sel])
        z = nz
        escaped |= ~(np.abs(z) <= R)
        if s >= burn_in:
            tail[:, s - burn_in] = np.where(escaped, np.nan, z)
    pts = tail[np.isfinite(tail)]
    includes_inf = bool(escaped.any()) or True  # infinity is always invariant for degree >= 2
    clusters: list[Cluster] = []
    gap = gap_floor
    if pts.size:
        uniq = np.unique(np.round(pts.real, 12) + 1j * np.round(pts.imag, 12))
        if uniq.size > 1:
            # spacing over the raw samples: repeated points are what converged
            tree = cKDTree(np.column_stack([pts.real, pts.imag]))
            d, _ = tree.query(np.column_stack([pts.real, pts.imag]), k=2)
            gap = max(gap_factor * float(np.median(d[:, 1])), gap_floor)
            labels = _single_linkage(uniq, gap)
        else:
            labels = np.zeros(1, dtype=int)
        for lab in range(labels.max() + 1):
            cp = uniq[labels == lab]
            cen = complex(cp.mean())
            diam = float(np.max(np.abs(cp - cen)) * 2) if cp.size > 1 else 0.0
            clusters.append(Cluster(cp, cen, diam))
        if len(clusters) > 1:
            cen = np.array([c.centroid for c in clusters])
            for a in range(len(clusters)):
                for b in range(a + 1, len(clusters)):
                    sep = abs(cen[a] - cen[b]) - 0.5 * (clusters[a].diameter + clusters[b].diameter)
                    if sep <= 2 * gap:
                        flags.append(f"ambiguous separation between clusters {a} and {b}")
        # stability: clusters seen in the first half of the tail vs the whole
        half = tail[:, : samples // 2]
        half = half[np.isfinite(half)]
        if half.size and uniq.size > 1:
            tree = cKDTree(np.column_stack([uniq.real, uniq.imag]))
            _, idx = tree.query(np.column_stack([half.real, half.imag]))
            if np.unique(labels[idx]).size != len(clusters):
                flags.append("slow convergence: cluster set changed within the sampled tail")

    # transition graph
    all_pts = np.concatenate([c.points for c in clusters]) if clusters else np.zeros(0, complex)
    owner = np.concatenate([np.full(c.points.size, k) for k, c in enumerate(clusters)]) \
        if clusters else np.zeros(0, int)
    tree = cKDTree(np.column_stack([all_pts.real, all_pts.imag])) if all_pts.size else None
    graph: dict = {}
    for j in range(system.m):
        graph[(-1, j)] = {-1}
    for k, c in enumerate(clusters):
        sample = c.points[:: max(1, c.points.size // 200)]
        for j in range(system.m):
            img = system[j](sample)
            esc = ~(np.abs(img) <= R)
            targets = set()
            if esc.any():
                targets.add(-1)
            fin = img[~esc]
            if fin.size:
                d, idx = tree.query(np.column_stack([fin.real, fin.imag]))
                if np.any(d > gap):
                    flags.append(f"cluster {k} under generator {j + 1} lands off the clusters")
                targets.update(int(owner[i]) for i in idx[d <= gap])
            graph[(k, j)] = targets
    edges: dict = {}
    for (k, j), ts in graph.items():
        edges.setdefault(k, set()).update(ts)
    nodes = [-1] + list(range(len(clusters)))
    pos = {v: i for i, v in enumerate(nodes)}
    rows, cols = [], []
    for u, vs in edges.items():
        for v in vs:
            rows.append(pos[u])
            cols.append(pos[v])
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(nodes)))
    ncomp, comp = connected_components(adj, directed=True, connection="strong")
    minimal = []
    for c in range(ncomp):
        members = [nodes[i] for i in np.flatnonzero(comp == c)]
        out = set().union(*(edges.get(u, set()) for u in members))
        if out <= set(members):
            minimal.append(MinimalSet(tuple(sorted(members)), _period(members, edges)))
    minimal.sort(key=lambda L: L.clusters)
    if any(L.is_infinity for L in minimal):
        minimal = [L for L in minimal if L.is_infinity] + [L for L in minimal if not L.is_infinity]
    return MinimalSetReport(clusters, graph, minimal, gap, includes_inf, flags)


@dataclass
class MinimalMC:
    probabilities: list[float]     # one per report.minimal entry
    indeterminate: float
    counts: list[int]
    undecided: int
    trials: int
    flagged: bool = False

    def exact_total(self) -> Fraction:
        return sum((Fraction(c, self.trials) for c in self.counts), Fraction(self.undecided, self.trials))


def t_minimal_mc(z: complex, model: RandomModel, report: MinimalSetReport, trials: int = 10_000,
                 rng_seed: int = 0, max_steps: int = 200, neighborhood: float | None = None,
                 params: EscapeParams | None = None, max_indeterminate: float = 0.01) -> MinimalMC:
    """Probability that the random orbit of ``z`` ends near each minimal set."""
    if params is None:
        params = EscapeParams.for_system(model.system)
    R = params.radius
    radius = max(10 * report.gap, 1e-4) if neighborhood is None else neighborhood
    finite = [(i, L) for i, L in enumerate(report.minimal) if not L.is_infinity]
    inf_idx = [i for i, L in enumerate(report.minimal) if L.is_infinity]
    pts, lab = [], []
    for i, L in finite:
        for k in L.clusters:
            pts.append(report.clusters[k].points)
            lab.append(np.full(report.clusters[k].points.size, i + 1))
    tree = None
    if pts:
        P = np.concatenate(pts)
        owner = np.concatenate(lab)
        tree = cKDTree(np.column_stack([P.real, P.imag]))

    def stop(w):
        out = np.zeros(w.shape, dtype=int)
        esc = ~(np.abs(w) <= R)
        if inf_idx:
            out[esc] = inf_idx[0] + 1
        if tree is not None and (~esc).any():
            fin = np.flatnonzero(~esc)
            d, idx = tree.query(np.column_stack([w[fin].real, w[fin].imag]))
            near = d <= radius
            out[fin[near]] = owner[idx[near]]
        return out

    rng = np.random.default_rng(rng_seed)
    labels = _random_orbits(z, model, rng, trials, max_steps, stop)
    counts = [int(np.count_nonzero(labels == i + 1)) for i in range(len(report.minimal))]
    und = int(np.count_nonzero(labels == 0))
    probs = [c / trials for c in counts]
    return MinimalMC(probs, und / trials, counts, und, trials, flagged=und / trials > max_indeterminate)


@dataclass
class ContractionEstimate:
    eta: float
    slopes: np.ndarray
    excluded: int
    contracting: bool


def contraction_rate(model: RandomModel, report: MinimalSetReport | None, probes, n: int = 40,
                     rng_seed: int = 0, params: EscapeParams | None = None,
                     log_floor: float = -700.0) -> ContractionEstimate:
    """Geometric contraction rate of random compositions near the attractors.

    For each probe a random word of length ``n`` is drawn and the
    least-squares slope of ``log |(h_{j_k} o ... o h_{j_1})'(z)|`` against
    ``k`` is taken; ``eta = exp(mean slope)``.  Probes that escape are
    excluded.  ``log_floor`` caps the per-step log derivative so that
    superattracting orbits give a finite, very negative slope.
    """
    if params is None:
        params = EscapeParams.for_system(model.system)
    R = params.radius
    probes = np.asarray(probes, dtype=complex).ravel()
    system = model.system
    dps = [derivative(h) for h in system]
    rngs = derive_rngs(rng_seed, probes.size)
    slopes = []
    excluded = 0
    ks = np.arange(1, n + 1)
    for z0, rng in zip(probes, rngs):
        if not abs(z0) <= R:
            excluded += 1
            continue
        word = model.sample_indices(rng, n)
        z = complex(z0)
        acc = 0.0
        logs = []
        ok = True
        for j in word:
            dv = abs(complex(dps[j](z)))
            acc += max(math.log(dv), log_floor) if dv > 0 else log_floor
            logs.append(max(acc, -1e300))
            z = complex(system[j](z))
            if not abs(z) <= R:
                ok = False
                break
        if not ok:
            excluded += 1
            continue
        slope = np.polyfit(ks, np.array(logs), 1)[0]
        slopes.append(slope)
    slopes = np.array(slopes)
    eta = float(math.exp(slopes.mean())) if slopes.size else math.nan
    return ContractionEstimate(eta, slopes, excluded, bool(slopes.size) and eta < 1.0)

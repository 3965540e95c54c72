"""Singular functions on the line as escape probabilities of random affine walks.

The Cantor function solves ``phi(x) = phi(3x)/2 + phi(3x - 2)/2`` and
Lebesgue's singular function solves ``psi(x) = a psi(2x) + (1 - a) psi(2x - 1)``,
both with ``0`` on ``(-inf, 0]`` and ``1`` on ``[1, inf)``.  Equivalently they
are the probability that the random walk applying ``x -> 3x`` or
``x -> 3x - 2`` (resp. ``2x`` or ``2x - 1``) drifts to ``+inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .markov import Interval, MCEstimate


@dataclass(frozen=True)
class StaircaseModel:
    kind: str = "cantor"
    a: float = 0.5

    def __post_init__(self):
        if self.kind not in ("cantor", "bernoulli"):
            raise ValueError(f"unknown staircase kind {self.kind!r}")
        if self.kind == "bernoulli" and not 0.0 < self.a < 1.0:
            raise ValueError("a must lie in (0, 1)")

    @classmethod
    def cantor(cls) -> "StaircaseModel":
        return cls("cantor")

    @classmethod
    def bernoulli(cls, a: float) -> "StaircaseModel":
        return cls("bernoulli", a)

    @property
    def maps(self) -> tuple[tuple[int, int], ...]:
        """``(slope, offset)`` of each affine map ``x -> slope*x + offset``."""
        if self.kind == "cantor":
            return ((3, 0), (3, -2))
        return ((2, 0), (2, -1))

    @property
    def probs(self) -> tuple[float, float]:
        if self.kind == "cantor":
            return (0.5, 0.5)
        return (self.a, 1.0 - self.a)


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def staircase_value(x, model: StaircaseModel, depth: int = 40) -> Interval:
    """Enclosure of the escape probability at ``x`` after ``depth`` levels.

    ``x`` is converted to an exact rational (a float converts exactly), so
    the orbit itself carries no rounding; only the probability weights are
    floating point.
    """
    maps = model.maps
    probs = model.probs
    frontier = [(_as_fraction(x), 1.0)]
    lo = []
    slack = []
    for level in range(depth + 1):
        nxt = []
        for y, w in frontier:
            if y >= 1:
                lo.append(w)
            elif y <= 0:
                continue
            elif level == depth:
                slack.append(w)
            else:
                for (s, b), p in zip(maps, probs):
                    nxt.append((s * y + b, w * p))
        frontier = nxt
        if not frontier:
            break
    low = math.fsum(lo)
    return Interval(low, low + math.fsum(slack))


def devils_staircase(x, depth: int = 40) -> Interval:
    return staircase_value(x, StaircaseModel.cantor(), depth)


def lebesgue_singular(x, a: float, depth: int = 40) -> Interval:
    return staircase_value(x, StaircaseModel.bernoulli(a), depth)


def staircase_batch(xs, model: StaircaseModel, depth: int = 40):
    """``(lo, hi)`` arrays for many points."""
    vals = [staircase_value(float(x), model, depth) for x in np.ravel(xs)]
    lo = np.array([v.lo for v in vals]).reshape(np.shape(xs))
    hi = np.array([v.hi for v in vals]).reshape(np.shape(xs))
    return lo, hi


def staircase_mc(x, model: StaircaseModel, trials: int = 10_000, max_iter: int = 64,
                 rng_seed: int = 0) -> MCEstimate:
    """Fraction of random walks from ``x`` reaching ``[1, inf)``.

    Both maps send ``[1, inf)`` into itself and ``(-inf, 0]`` into itself, so
    the walk is decided as soon as it leaves ``(0, 1)``.  Walks still inside
    after ``max_iter`` steps are reported as indeterminate.
    """
    rng = np.random.default_rng(rng_seed)
    (s1, b1), (s2, b2) = model.maps
    p1 = model.probs[0]
    y = np.full(trials, float(x))
    live = (y > 0) & (y < 1)
    for _ in range(max_iter):
        if not live.any():
            break
        first = rng.random(trials) < p1
        y = np.where(live, np.where(first, s1 * y + b1, s2 * y + b2), y)
        live = (y > 0) & (y < 1)
    up = int(np.count_nonzero(y >= 1))
    und = int(np.count_nonzero(live))
    est = up / trials
    se = math.sqrt(est * (1 - est) / trials)
    return MCEstimate(est, se, und / trials, trials, flagged=und > 0.01 * trials)

"""Deterministic work splitting.

Work is always cut into the same chunks regardless of the thread count, and
results are reassembled in chunk order, so outputs are bit-identical across
``threads`` settings.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def derive_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent generators spawned from ``seed``; stream ``i`` depends
    only on ``(seed, i)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def chunked_map(func: Callable[[T], R], chunks: Sequence[T], threads: int = 1) -> list[R]:
    if threads is None or threads <= 1 or len(chunks) <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, chunks))


def split(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]

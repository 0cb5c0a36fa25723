"""Chunked, order-stable Monte Carlo helpers.

Work is split into fixed-size chunks; chunk ``i`` draws from
``rng.substream(label, i)``.  Chunks may run on any number of threads but are
folded back in index order, so results never depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

THREADS_ENV = "ISOSPEC_THREADS"


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested or (int(cap) if cap else (os.cpu_count() or 1))
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    items = list(items)
    w = min(worker_count(workers), max(1, len(items)))
    if w == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))


def chunk_plan(total: int, size: int) -> list[tuple[int, int]]:
    """``(index, count)`` pairs covering ``total`` draws."""
    return [(i, min(size, total - i * size)) for i in range(math.ceil(total / size))]


class MomentAccumulator:
    """Running first and second moments of named real statistics.

    ``add`` takes arrays with the sample axis first; complex statistics are
    split into real and imaginary parts.
    """

    def __init__(self):
        self.count = 0
        self.sums: dict[str, np.ndarray] = {}
        self.sq: dict[str, np.ndarray] = {}

    @staticmethod
    def chunk_sums(stats: dict[str, np.ndarray]) -> tuple[int, dict, dict]:
        sums, sq, count = {}, {}, None
        for name, val in stats.items():
            v = np.asarray(val)
            c = v.shape[0]
            count = c if count is None else count
            if c != count:
                raise ValueError("statistics in a chunk must share the sample count")
            parts = [(name, v)] if not np.iscomplexobj(v) else [(name + ".re", v.real), (name + ".im", v.imag)]
            for key, arr in parts:
                sums[key] = arr.sum(axis=0)
                sq[key] = (arr * arr).sum(axis=0)
        return count or 0, sums, sq

    def merge(self, partial: tuple[int, dict, dict]):
        count, sums, sq = partial
        self.count += count
        for k in sums:
            if k in self.sums:
                self.sums[k] = self.sums[k] + sums[k]
                self.sq[k] = self.sq[k] + sq[k]
            else:
                self.sums[k] = sums[k]
                self.sq[k] = sq[k]

    def mean(self, key: str) -> np.ndarray:
        return self.sums[key] / self.count

    def se(self, key: str) -> np.ndarray:
        m = self.mean(key)
        var = np.clip(self.sq[key] / self.count - m * m, 0.0, None) * self.count / max(self.count - 1, 1)
        return np.sqrt(var / self.count)

    def mean_complex(self, key: str):
        if key + ".re" in self.sums:
            return self.mean(key + ".re") + 1j * self.mean(key + ".im")
        return self.mean(key)


def z_scores(mean, se, exact, atol: float = 1e-12) -> np.ndarray:
    """``(mean - exact) / se`` with ``se`` floored at ``atol`` so that rounding
    noise in quantities that are exactly constant does not register."""
    mean, se, exact = np.broadcast_arrays(np.asarray(mean, float), np.asarray(se, float),
                                          np.asarray(exact, float))
    return (mean - exact) / np.maximum(se, atol)


def gaussian_controls_1d(m: int, controls: int, rng, label: str = "control") -> np.ndarray:
    """Quantile-coupling W1 of true N(0,1) samples of size m (one value per control)."""
    from ..metrics import w1_1d_vs_gaussian

    return np.array([w1_1d_vs_gaussian(rng.substream(label, i).generator().standard_normal(m))
                     for i in range(controls)])


def gaussian_controls_multi(m: int, d: int, controls: int, rng, workers=None,
                            label: str = "control") -> np.ndarray:
    """Assignment W1 between two independent N(0, I_d) samples of size m."""
    from ..metrics import w1_multi

    def one(i):
        g = rng.substream(label, i).generator()
        return w1_multi(g.standard_normal((m, d)), g.standard_normal((m, d)))

    return np.array(parallel_map(one, range(controls), workers))

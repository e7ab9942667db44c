"""Synthetic interval bars from a drifted Brownian motion with one change point.

Each day is simulated on a grid of ``substeps`` Gaussian increments. The
day's extremes are the grid extremes, which understate the continuous ones
by roughly ``0.58 * sigma / sqrt(substeps)``.

Random numbers come from Philox (a counter-based generator) keyed by
``(seed, day)``; day ``i`` always sees the same increments whatever order
days are generated in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SegmentParams, Series


@dataclass(frozen=True)
class SimSpec:
    n: int
    tau: int
    params0: SegmentParams
    params1: SegmentParams
    o1: float = 0.0
    substeps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 3 <= self.tau <= self.n - 3:
            raise ValueError(f"need 3 <= tau <= n - 3, got tau={self.tau}, n={self.n}")
        if self.substeps < 2:
            raise ValueError("substeps must be >= 2")


def day_generator(seed: int, day: int) -> np.random.Generator:
    """Independent stream for one day (``day`` is 1-based)."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1), spawn_key=(int(day),))
    return np.random.Generator(np.random.Philox(ss))


def day_normals(seed: int, day: int, m: int) -> np.ndarray:
    return day_generator(seed, day).standard_normal(m)


def bars_from_increments(o1: float, incr: np.ndarray, stride: int = 1) -> Series:
    """Build chained bars from an (n, m) array of per-step increments.

    Day ``i`` opens at the previous close and its extremes include the open,
    so ``l <= min(o, c)`` and ``max(o, c) <= u`` hold exactly. With
    ``stride > 1`` only every ``stride``-th grid point is observed: the
    coarse grid is an exact subset of the fine one.
    """
    rel = np.cumsum(incr, axis=1)[:, stride - 1::stride]
    if rel.shape[1] * stride != incr.shape[1]:
        raise ValueError("substeps must be divisible by stride")
    level = np.cumsum(np.concatenate([[float(o1)], rel[:, -1]]))
    o = level[:-1]
    path = o[:, None] + rel
    u = np.maximum(o, path.max(axis=1))
    l = np.minimum(o, path.min(axis=1))  # noqa: E741
    c = level[1:]
    return Series(o, u, l, c, validate=False)


def increments(spec: SimSpec) -> np.ndarray:
    m = spec.substeps
    out = np.empty((spec.n, m))
    for i in range(1, spec.n + 1):
        p = spec.params0 if i <= spec.tau else spec.params1
        out[i - 1] = p.mu / m + np.sqrt(p.sigma2 / m) * day_normals(spec.seed, i, m)
    return out


def simulate_series(spec: SimSpec) -> Series:
    """Simulate ``spec.n`` chained bars; parameters switch after day ``spec.tau``."""
    return bars_from_increments(spec.o1, increments(spec))

"""Core value types: daily interval bars, regime parameters and bar series.

All prices are log prices and one bar spans one unit of time, so drift and
variance are per-day quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidBar, InvalidParams, SeriesTooShort

MIN_SERIES_LENGTH = 7


@dataclass(frozen=True)
class IntervalBar:
    """One day's (open, up, low, close) observation in log-price space."""

    o: float
    u: float
    l: float  # noqa: E741
    c: float

    def __post_init__(self):
        check_bar(self.o, self.u, self.l, self.c)

    def shifted(self, delta: float) -> "IntervalBar":
        return IntervalBar(self.o + delta, self.u + delta, self.l + delta, self.c + delta)

    def reflected(self) -> "IntervalBar":
        """Mirror image under y -> -y (max and min swap roles)."""
        return IntervalBar(-self.o, -self.l, -self.u, -self.c)


def check_bar(o, u, l, c, where=""):  # noqa: E741
    vals = (o, u, l, c)
    if not all(math.isfinite(v) for v in vals):
        raise InvalidBar(f"non-finite bar value {vals}{where}")
    if not (l <= min(o, c) and max(o, c) <= u):
        raise InvalidBar(f"bar violates l <= min(o, c) <= max(o, c) <= u: {vals}{where}")
    if not u > l:
        raise InvalidBar(f"zero-range bar (u == l): {vals}{where}")


@dataclass(frozen=True)
class SegmentParams:
    """Drift and variance of one regime."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma2)):
            raise InvalidParams(f"non-finite parameters mu={self.mu}, sigma2={self.sigma2}")
        if not self.sigma2 > 0:
            raise InvalidParams(f"sigma2 must be positive, got {self.sigma2}")

    def scaled(self, s: float) -> "SegmentParams":
        return SegmentParams(self.mu * s, self.sigma2 * s * s)


class Series:
    """An ordered sequence of interval bars stored column-wise.

    Columns are read-only float64 arrays; ``series[i]`` returns the i-th bar
    (0-based) as an :class:`IntervalBar`.
    """

    __slots__ = ("o", "u", "l", "c")

    def __init__(self, o, u, l, c, *, validate=True, min_length=MIN_SERIES_LENGTH):  # noqa: E741
        cols = [np.array(x, dtype=np.float64, copy=True).reshape(-1) for x in (o, u, l, c)]
        n = cols[0].size
        if any(col.size != n for col in cols):
            raise ValueError("o, u, l, c must have equal length")
        for col in cols:
            col.setflags(write=False)
        self.o, self.u, self.l, self.c = cols
        if validate:
            self.validate(min_length=min_length)

    @classmethod
    def from_bars(cls, bars, **kw) -> "Series":
        bars = list(bars)
        return cls([b.o for b in bars], [b.u for b in bars], [b.l for b in bars],
                   [b.c for b in bars], **kw)

    def validate(self, min_length=MIN_SERIES_LENGTH):
        if len(self) < min_length:
            raise SeriesTooShort(f"series has {len(self)} bars, need at least {min_length}")
        o, u, l, c = self.o, self.u, self.l, self.c  # noqa: E741
        finite = np.isfinite(o) & np.isfinite(u) & np.isfinite(l) & np.isfinite(c)
        ok = finite & (l <= np.minimum(o, c)) & (np.maximum(o, c) <= u) & (u > l)
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            check_bar(o[i], u[i], l[i], c[i], where=f" at bar {i + 1}")

    def __len__(self) -> int:
        return self.o.size

    @property
    def n(self) -> int:
        return self.o.size

    def __getitem__(self, i) -> IntervalBar:
        return IntervalBar(float(self.o[i]), float(self.u[i]), float(self.l[i]), float(self.c[i]))

    def __iter__(self) -> Iterator[IntervalBar]:
        for i in range(len(self)):
            yield self[i]

    @property
    def bars(self) -> list[IntervalBar]:
        return list(self)

    @property
    def diffs(self) -> np.ndarray:
        return self.c - self.o

    def segment(self, start: int, stop: int) -> "Series":
        """Bars ``start..stop-1`` (0-based) as a new series without length checks."""
        return Series(self.o[start:stop], self.u[start:stop], self.l[start:stop],
                      self.c[start:stop], validate=False)

    def shifted(self, delta: float) -> "Series":
        return Series(self.o + delta, self.u + delta, self.l + delta, self.c + delta,
                      validate=False)

    def scaled(self, s: float) -> "Series":
        if not s > 0:
            raise ValueError("scale must be positive")
        return Series(self.o * s, self.u * s, self.l * s, self.c * s, validate=False)

    def as_array(self) -> np.ndarray:
        """(n, 4) array with columns o, u, l, c."""
        return np.column_stack([self.o, self.u, self.l, self.c])

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in
                   zip((self.o, self.u, self.l, self.c), (other.o, other.u, other.l, other.c)))

    def __repr__(self):
        return f"Series(n={len(self)})"

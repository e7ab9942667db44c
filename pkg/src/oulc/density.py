"""Joint density of the daily (up, low, close) triple given the open.

Under a drifted Brownian motion observed over a unit day, the density of the
day's maximum ``u``, minimum ``l`` and close ``c`` given the open ``o`` is a
two-sided alternating series (reflection principle) multiplied by a Girsanov
drift factor::

    f(u, l, c | o) = sum_k g1_k h1_k - sum_k g2_k h2_k

with ``d = u - l`` and

    g1_k = 4k(k+1) / (sqrt(2 pi) s^1.5) * (1 - w1_k^2 / s),  w1_k = c + o - 2u - 2k d
    g2_k = 4k^2    / (sqrt(2 pi) s^1.5) * (1 - w2_k^2 / s),  w2_k = c - o - 2k d
    hi_k = exp(-wi_k^2 / (2 s) - mu^2 / (2 s) + mu (c - o) / s)

where ``s`` is the per-day variance. The ``g1`` factors change sign, so terms
are summed after factoring out the largest exponent; this keeps the sum exact
for variances down to ~1e-6 where raw evaluation underflows.

When ``(u - l)^2 < s`` the image series cancels catastrophically (terms of
size ~1 summing to ~exp(-pi^2 s / 2 (u-l)^2)), so those bars use the
eigenfunction expansion of the same density, which converges fastest there.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import IntervalBar, SegmentParams, check_bar
from . import _kernel
from .errors import InvalidParams

LOG_FLOOR = -700.0


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls how many series rings ``|k| = 0, 1, ..., K`` are summed.

    Summation stops at the first ``K >= k_min`` whose ring magnitude falls
    below ``rel_tol`` times the accumulated magnitude of the inner rings, or
    at ``k_max``.
    """

    rel_tol: float = 1e-12
    k_min: int = 3
    k_max: int = 64

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class LogDensityValue:
    log_f: float
    k_used: int
    clamped: bool


class DensityEval(NamedTuple):
    """Vectorised evaluation result; all fields share the broadcast shape."""

    log_f: np.ndarray
    dlogf: np.ndarray  # d log f / d sigma2; zero where clamped
    k_used: np.ndarray
    clamped: np.ndarray


# (u - l)^2 / sigma2 below this uses the eigenfunction expansion
SPECTRAL_SWITCH = 1.0


def _check_support(o, u, l, c):  # noqa: E741
    ok = (np.isfinite(o) & np.isfinite(u) & np.isfinite(l) & np.isfinite(c)
          & (l <= np.minimum(o, c)) & (np.maximum(o, c) <= u) & (u > l))
    if not np.all(ok):
        idx = np.unravel_index(int(np.flatnonzero(~ok)[0]), ok.shape) if ok.ndim else ()
        check_bar(float(o[idx]), float(u[idx]), float(l[idx]), float(c[idx]))


def oulc_logpdf(o, u, l, c, mu, sigma2, policy: TruncationPolicy = DEFAULT_POLICY,  # noqa: E741
                check=True) -> DensityEval:
    """Vectorised log density and its sigma2-derivative.

    Arguments broadcast against each other. Bars where the truncated series
    is not strictly positive get ``log_f = LOG_FLOOR``, zero derivative and
    ``clamped = True``.
    """
    o, u, l, c, mu, s = np.broadcast_arrays(*(np.asarray(x, dtype=np.float64)  # noqa: E741
                                              for x in (o, u, l, c, mu, sigma2)))
    shape = o.shape
    if check:
        _check_support(o, u, l, c)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s)) and np.all(s > 0)):
            raise InvalidParams("sigma2 must be positive and parameters finite")
    flat = [np.ascontiguousarray(x).reshape(-1) for x in (o, u, l, c, mu, s)]
    out = _kernel.eval_arrays(*flat, policy.rel_tol, policy.k_min, policy.k_max,
                              SPECTRAL_SWITCH, LOG_FLOOR)
    return DensityEval(*(x.reshape(shape) for x in out))


def _eval_bar(bar: IntervalBar, params: SegmentParams, policy: TruncationPolicy) -> DensityEval:
    check_bar(bar.o, bar.u, bar.l, bar.c)
    return oulc_logpdf(bar.o, bar.u, bar.l, bar.c, params.mu, params.sigma2, policy, check=False)


def log_density_oulc(bar: IntervalBar, params: SegmentParams,
                     policy: TruncationPolicy = DEFAULT_POLICY) -> LogDensityValue:
    """Log of the joint density of (u, l, c) given o for one bar."""
    ev = _eval_bar(bar, params, policy)
    return LogDensityValue(float(ev.log_f), int(ev.k_used), bool(ev.clamped))


def dlogf_dsigma2(bar: IntervalBar, params: SegmentParams,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Analytic derivative of ``log f`` with respect to sigma2 (0 when clamped)."""
    return float(_eval_bar(bar, params, policy).dlogf)


def log_density_oc(o: float, c: float, params: SegmentParams) -> float:
    """Gaussian log density of the day's return ``c - o`` (open/close model)."""
    r = c - o - params.mu
    return -0.5 * math.log(2.0 * math.pi * params.sigma2) - r * r / (2.0 * params.sigma2)


def oc_logpdf(o, c, mu, sigma2):
    """Vectorised :func:`log_density_oc`."""
    o, c, mu, sigma2 = (np.asarray(x, dtype=np.float64) for x in (o, c, mu, sigma2))
    r = c - o - mu
    return -0.5 * np.log(2.0 * np.pi * sigma2) - r * r / (2.0 * sigma2)

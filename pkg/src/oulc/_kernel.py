"""Compiled per-bar density kernel.

Scalar loops: each bar's value depends only on its own inputs and each
segment sum accumulates bars in index order, so results do not depend on how
work is batched.
"""

import math

import numba as nb
import numpy as np

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
LOG2 = math.log(2.0)
PI2 = math.pi * math.pi
# sums within this many rounding units of the term magnitudes count as zero
ROUNDOFF = 64.0 * 2.0 ** -52


@nb.njit(cache=True, inline="always")
def _image_terms(k, z, v0, d, s, M):
    kd = 2.0 * k * d
    w1 = v0 - kd
    w2 = z - kd
    q1 = w1 * w1 / s
    q2 = w2 * w2 / s
    a1 = 4.0 * k * (k + 1.0)
    a2 = -4.0 * k * k
    # zero-coefficient terms (k = 0, -1 above; k = 0 below) would overflow against M
    e1 = math.exp(-0.5 * q1 - M) if a1 != 0.0 else 0.0
    e2 = math.exp(-0.5 * q2 - M) if a2 != 0.0 else 0.0
    t1 = a1 * (1.0 - q1) * e1
    t2 = a2 * (1.0 - q2) * e2
    r1 = a1 * (-1.5 + q1 * (3.0 - 0.5 * q1)) * e1
    r2 = a2 * (-1.5 + q2 * (3.0 - 0.5 * q2)) * e2
    return t1 + t2, r1 + r2, abs(t1) + abs(t2)


@nb.njit(cache=True)
def _image(z, v0, d, s, rel_tol, k_min, k_max):
    # largest exponent among terms with a nonzero coefficient: k in {1, -2} for
    # the first series, k = +-1 for the second (v0 in [-2d, 0], z in [-d, d])
    wa = v0 - 2.0 * d
    wb = v0 + 4.0 * d
    wc = z - 2.0 * d
    wd = z + 2.0 * d
    M = -0.5 * min(wa * wa, wb * wb, wc * wc, wd * wd) / s
    sp = 0.0
    sr = 0.0
    inner = 0.0
    mag = 0.0
    K = 0
    for j in range(k_max + 1):
        tp, tr, tm = _image_terms(float(j), z, v0, d, s, M)
        if j > 0:
            tp2, tr2, tm2 = _image_terms(float(-j), z, v0, d, s, M)
            tp += tp2
            tr += tr2
            tm += tm2
        sp += tp
        sr += tr
        mag += tm
        K = j
        if j >= k_min and tm <= rel_tol * inner:
            break
        inner += tm
    return M, sp, sr / s, mag, K


@nb.njit(cache=True)
def _spectral(alpha, beta, d, s, rel_tol, k_min, k_max):
    sp = 0.0
    sr = 0.0
    inner = 0.0
    mag = 0.0
    N = 0
    for n in range(1, k_max + 1):
        th = math.pi * n / d
        sa = math.sin(th * alpha)
        ca = math.cos(th * alpha)
        sb = math.sin(th * beta)
        cb = math.cos(th * beta)
        ss = sa * sb
        x = 2.0 * alpha * sb * ca + 2.0 * beta * sa * cb - d * (sa * cb + ca * sb)
        y = (-(alpha * (alpha - d) + beta * (beta - d) + 5.0 * s) * ss
             + (alpha * (beta - d) + beta * (alpha - d)) * ca * cb)
        th2 = th * th
        br = (2.0 + th2 * th2 * s * s) * ss + (2.0 * th - th2 * th * s) * x + th2 * y
        dbr = -0.5 * th2 * br + 2.0 * th2 * th2 * s * ss - th2 * th * x - 5.0 * th2 * ss
        decay = math.exp(-(n * n - 1.0) * PI2 * s / (2.0 * d * d))
        t = br * decay
        sp += t
        sr += dbr * decay
        mag += abs(t)
        N = n
        if n >= k_min and abs(t) <= rel_tol * inner:
            break
        inner += abs(t)
    return -PI2 * s / (2.0 * d * d), sp, sr, mag, N


@nb.njit(cache=True)
def bar_eval(o, u, l, c, mu, s, rel_tol, k_min, k_max, switch, floor):  # noqa: E741
    """Return ``(log_f, dlogf/dsigma2, k_used, clamped)`` for one bar."""
    # pick a fixed member of the reflection pair (o, u, l, c; mu) ~ (-o, -l, -u, -c; -mu)
    lo_o = o - l
    lo_c = c - l
    hi_o = u - o
    hi_c = u - c
    if lo_o > hi_o or (lo_o == hi_o and lo_c > hi_c):
        o, u, l, c, mu = -o, -l, -u, -c, -mu  # noqa: E741
    z = c - o
    d = u - l
    drift = (2.0 * mu * z - mu * mu) / (2.0 * s)
    if d * d < switch * s:
        M, sp, sr, mag, K = _spectral(o - l, c - l, d, s, rel_tol, k_min, k_max)
        log_pre = LOG2 - 3.0 * math.log(d)
    else:
        M, sp, sr, mag, K = _image(z, c + o - 2.0 * u, d, s, rel_tol, k_min, k_max)
        log_pre = -HALF_LOG_2PI - 1.5 * math.log(s)
    # non-positive, or too small to tell from rounding (e.g. o = c = l, where f = 0)
    if not sp > ROUNDOFF * mag:
        return floor, 0.0, K, True
    return log_pre + M + math.log(sp) + drift, sr / sp - drift / s, K, False


@nb.njit(cache=True)
def eval_arrays(o, u, l, c, mu, s, rel_tol, k_min, k_max, switch, floor):  # noqa: E741
    n = o.size
    log_f = np.empty(n)
    dlogf = np.empty(n)
    k_used = np.empty(n, dtype=np.int64)
    clamped = np.empty(n, dtype=np.bool_)
    for i in range(n):
        a, b, k, f = bar_eval(o[i], u[i], l[i], c[i], mu[i], s[i], rel_tol, k_min, k_max,
                              switch, floor)
        log_f[i] = a
        dlogf[i] = b
        k_used[i] = k
        clamped[i] = f
    return log_f, dlogf, k_used, clamped


@nb.njit(cache=True)
def eval_segments(o, u, l, c, starts, stops, mu, s, active,  # noqa: E741
                  rel_tol, k_min, k_max, switch, floor):
    """Per-segment sums of log f, d log f / d sigma2 and the clamp count."""
    P = starts.size
    ell = np.zeros(P)
    dl = np.zeros(P)
    ncl = np.zeros(P, dtype=np.int64)
    for p in range(P):
        if not active[p]:
            continue
        a = 0.0
        b = 0.0
        m = 0
        for i in range(starts[p], stops[p]):
            lf, dd, _, f = bar_eval(o[i], u[i], l[i], c[i], mu[p], s[p], rel_tol, k_min,
                                    k_max, switch, floor)
            a += lf
            b += dd
            m += f
        ell[p] = a
        dl[p] = b
        ncl[p] = m
    return ell, dl, ncl

"""Profile maximum likelihood for a single change point.

For a candidate change day ``tau`` the drifts have closed forms (segment means
of ``c - o``). The OULC variances do not, so each segment's ``sigma2`` is
found by Newton iteration on ``zeta = log(sigma)``: analytic gradient, central
finite-difference curvature, clamped and backtracked steps, several starts.
The two segments share no parameters, so they are fitted independently.

The change day is the argmax over ``tau in {3, ..., n - 3}`` of the profile
log-likelihood (smallest ``tau`` on ties). All candidate segments of a scan
are iterated together as one batch; each problem's arithmetic is independent
of the others, so a batched fit equals a stand-alone fit bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import SegmentParams, Series
from . import _kernel, density
from .density import DEFAULT_POLICY, TruncationPolicy, oulc_logpdf
from .errors import (AllTauFailed, DegenerateSegment, NoConvergence, SegmentTooShort,
                     TauOutOfRange)

OULC = "OULC"
OC = "OC"
AIC_N_PARAMS = 5  # mu0, mu1, sigma2_0, sigma2_1, tau
CLAMP_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class NRConfig:
    eps: float = 1e-6
    max_iter: int = 100
    step_clamp: float = 1.0
    init_multipliers: tuple = (0.5, 1.0, 2.0)
    fd_step: float = 1e-5
    golden_halfwidth: float = 3.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.step_clamp > 0:
            raise ValueError("step_clamp must be positive")
        if not self.init_multipliers or any(m <= 0 for m in self.init_multipliers):
            raise ValueError("init_multipliers must be positive")
        object.__setattr__(self, "init_multipliers", tuple(float(m) for m in self.init_multipliers))


DEFAULT_NR = NRConfig()


@dataclass
class SegmentFit:
    """Outcome of one segment's variance fit."""

    sigma2: float
    loglik: float
    grad: float  # d loglik / d zeta at the optimum
    method: str  # "newton" or "golden"
    iterations: list  # per start
    converged: list  # per start
    start_sigma2: list
    start_loglik: list
    n_bars: int
    n_clamped: int


@dataclass(frozen=True)
class ChangePointFit:
    tau_hat: int
    params0: SegmentParams
    params1: SegmentParams
    loglik: float
    aic: float
    model: str
    n: int
    n_params: int = AIC_N_PARAMS
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def estimates(self) -> dict:
        return {"tau": self.tau_hat, "mu0": self.params0.mu, "mu1": self.params1.mu,
                "sigma2_0": self.params0.sigma2, "sigma2_1": self.params1.sigma2}


def aic(loglik: float, n_params: int = AIC_N_PARAMS) -> float:
    if not math.isfinite(loglik):
        raise ValueError("loglik must be finite")
    return 2.0 * n_params - 2.0 * loglik


def _check_tau(n, tau):
    if not 3 <= tau <= n - 3:
        raise TauOutOfRange(f"tau={tau} outside {{3, ..., {n - 3}}}")


def mu_hats(series: Series, tau: int) -> tuple[float, float]:
    """Closed-form segment drifts: means of ``c - o`` before and after ``tau``."""
    n = len(series)
    _check_tau(n, tau)
    z = series.diffs
    return float(z[:tau].sum() / tau), float(z[tau:].sum() / (n - tau))


def _oc_sigma2(z: np.ndarray, mu: float) -> float:
    r = z - mu
    return float((r * r).sum() / z.size)


# -- batched Newton ---------------------------------------------------------

class _Problems:
    """Segment problems ``[starts[k], stops[k])`` over one bar series."""

    def __init__(self, series, starts, stops, mus):
        self.series = series
        self.starts = np.ascontiguousarray(starts, dtype=np.int64)
        self.stops = np.ascontiguousarray(stops, dtype=np.int64)
        self.P = self.starts.size
        self.mu = np.ascontiguousarray(mus, dtype=np.float64)

    def evaluate(self, zeta, which, policy):
        """Sum log f and d log f / d zeta over each selected problem's bars."""
        s = self.series
        sig2 = np.exp(2.0 * np.asarray(zeta, dtype=np.float64))
        ell, dl, ncl = _kernel.eval_segments(
            s.o, s.u, s.l, s.c, self.starts, self.stops, self.mu, sig2,
            np.ascontiguousarray(which, dtype=np.bool_), policy.rel_tol, policy.k_min,
            policy.k_max, density.SPECTRAL_SWITCH, density.LOG_FLOOR)
        return ell, dl * 2.0 * sig2, ncl

    def evaluate3(self, zeta, which, cfg, policy):
        """Log-likelihood, gradient and finite-difference curvature in zeta."""
        h = cfg.fd_step * np.maximum(1.0, np.abs(zeta))
        ell, g, ncl = self.evaluate(zeta, which, policy)
        _, gp, _ = self.evaluate(zeta + h, which, policy)
        _, gm, _ = self.evaluate(zeta - h, which, policy)
        return ell, g, (gp - gm) / (2.0 * h), ncl

    def loglik_at(self, zeta, k, policy):
        which = np.zeros(self.P, dtype=bool)
        which[k] = True
        z = np.zeros(self.P)
        z[k] = zeta
        return self.evaluate(z, which, policy)


def _newton_step(g, H, clamp):
    step = np.where(H < 0, -g / np.where(H < 0, H, -1.0), np.sign(g) * clamp)
    return np.clip(step, -clamp, clamp)


def _newton_batch(probs: _Problems, zeta0, cfg: NRConfig, policy):
    """Run safeguarded Newton from ``zeta0`` for every problem at once."""
    P = probs.P
    zeta = np.array(zeta0, dtype=np.float64)
    active = np.ones(P, dtype=bool)
    converged = np.zeros(P, dtype=bool)
    iters = np.zeros(P, dtype=np.int64)
    ell, g, H, ncl = probs.evaluate3(zeta, active, cfg, policy)
    ell0 = ell.copy()
    step = _newton_step(g, H, cfg.step_clamp)
    for _ in range(cfg.max_iter):
        if not active.any():
            break
        trial = np.where(active, zeta + step, zeta)
        ell_t, g_t, H_t, ncl_t = probs.evaluate3(trial, active, cfg, policy)
        iters += active
        tol = 1e-12 * np.maximum(1.0, np.abs(ell))
        ok = active & (ell_t >= ell - tol)
        bad = active & ~ok
        small = np.abs(step) < cfg.eps
        zeta = np.where(ok, trial, zeta)
        ell = np.where(ok, ell_t, ell)
        g = np.where(ok, g_t, g)
        H = np.where(ok, H_t, H)
        ncl = np.where(ok, ncl_t, ncl)
        done = (ok | bad) & small
        converged |= done
        active &= ~done
        step = np.where(ok, _newton_step(g, H, cfg.step_clamp), np.where(bad, 0.5 * step, step))
    return zeta, ell, g, converged, iters, ell0, ncl


def _golden(fn, lo, hi, tol=1e-9, max_iter=200):
    """Golden-section maximisation of a unimodal scalar function on [lo, hi]."""
    r = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - r * (b - a)
    x2 = a + r * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - r * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + r * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _anchor_sigma2(series, start, stop, mu):
    z = series.diffs[start:stop]
    s2 = _oc_sigma2(z, mu)
    if not s2 > 0:
        # constant returns: fall back to a range-based scale
        d = series.u[start:stop] - series.l[start:stop]
        s2 = float((d * d).sum() / (4.0 * math.log(2.0) * d.size))
    return s2


def _fit_segments(series: Series, starts, stops, mus, cfg: NRConfig, policy):
    """Fit sigma2 on every segment ``[starts[k], stops[k])`` at drift ``mus[k]``.

    Returns a list whose entries are :class:`SegmentFit` or an exception.
    """
    K = len(starts)
    S = len(cfg.init_multipliers)
    anchors = np.array([_anchor_sigma2(series, a, b, m) for a, b, m in zip(starts, stops, mus)])
    rep_starts = np.repeat(starts, S)
    rep_stops = np.repeat(stops, S)
    rep_mus = np.repeat(mus, S)
    probs = _Problems(series, rep_starts, rep_stops, rep_mus)
    mult = np.tile(np.array(cfg.init_multipliers), K)
    zeta0 = 0.5 * np.log(np.repeat(anchors, S) * mult)
    zeta, ell, g, conv, iters, ell0, ncl = _newton_batch(probs, zeta0, cfg, policy)

    out = []
    for k in range(K):
        sl = slice(k * S, (k + 1) * S)
        z_k, e_k, g_k, c_k = zeta[sl], ell[sl], g[sl], conv[sl]
        common = dict(iterations=iters[sl].tolist(), converged=c_k.tolist(),
                      start_sigma2=np.exp(2.0 * zeta0[sl]).tolist(),
                      start_loglik=ell0[sl].tolist(), n_bars=int(stops[k] - starts[k]))
        if c_k.any():
            cand = np.where(c_k, e_k, -np.inf)
            j = int(np.argmax(cand))
            out.append(SegmentFit(sigma2=float(np.exp(2.0 * z_k[j])), loglik=float(e_k[j]),
                                  grad=float(g_k[j]), method="newton",
                                  n_clamped=int(ncl[k * S + j]), **common))
            continue
        # every start exhausted max_iter: bracketed golden-section search
        centre = 0.5 * math.log(anchors[k])
        sub = _Problems(series, [starts[k]], [stops[k]], [mus[k]])
        fn = lambda zz: float(sub.loglik_at(zz, 0, policy)[0][0])  # noqa: E731
        lo, hi = centre - cfg.golden_halfwidth, centre + cfg.golden_halfwidth
        zg, fg = _golden(fn, lo, hi)
        best = int(np.argmax(e_k))
        if min(zg - lo, hi - zg) > 10 * cfg.eps and fg >= e_k[best]:
            e, gg, nc = sub.loglik_at(zg, 0, policy)
            out.append(SegmentFit(sigma2=float(np.exp(2.0 * zg)), loglik=float(e[0]),
                                  grad=float(gg[0]), method="golden", n_clamped=int(nc[0]),
                                  **common))
        else:
            out.append(NoConvergence(
                f"no start converged on bars {starts[k] + 1}..{stops[k]}",
                best=(float(np.exp(2.0 * z_k[best])), float(e_k[best]))))
    return out


# -- public fitting API -----------------------------------------------------

def fit_sigma2_newton(bars, mu: float, cfg: NRConfig = DEFAULT_NR,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[float, SegmentFit]:
    """Maximise one segment's OULC log-likelihood over sigma2 at fixed drift.

    ``bars`` is a :class:`Series` (no minimum length beyond 3) or a sequence
    of :class:`IntervalBar`.
    """
    series = bars if isinstance(bars, Series) else Series.from_bars(bars, validate=False)
    if len(series) < 3:
        raise SegmentTooShort(f"segment has {len(series)} bars, need at least 3")
    series.validate(min_length=3)
    if not math.isfinite(mu):
        raise ValueError("mu must be finite")
    res = _fit_segments(series, np.array([0]), np.array([len(series)]), np.array([mu]),
                        cfg, policy)[0]
    if isinstance(res, Exception):
        raise res
    return res.sigma2, res


def loglik_oulc(series: Series, tau: int, params0: SegmentParams, params1: SegmentParams,
                policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Two-regime OULC log-likelihood evaluated directly."""
    a = oulc_logpdf(series.o[:tau], series.u[:tau], series.l[:tau], series.c[:tau],
                    params0.mu, params0.sigma2, policy).log_f.sum()
    b = oulc_logpdf(series.o[tau:], series.u[tau:], series.l[tau:], series.c[tau:],
                    params1.mu, params1.sigma2, policy).log_f.sum()
    return float(a + b)


def loglik_oc(series: Series, tau: int, params0: SegmentParams, params1: SegmentParams) -> float:
    """Two-regime open/close Gaussian log-likelihood."""
    z = series.diffs
    out = 0.0
    for zz, p in ((z[:tau], params0), (z[tau:], params1)):
        r = zz - p.mu
        out += -zz.size / 2.0 * math.log(2.0 * math.pi * p.sigma2) - (r * r).sum() / (2.0 * p.sigma2)
    return float(out)


def _segments_for(series, taus):
    n = len(series)
    mus = [mu_hats(series, t) for t in taus]
    starts = np.concatenate([np.zeros(len(taus), dtype=np.int64), np.asarray(taus)])
    stops = np.concatenate([np.asarray(taus), np.full(len(taus), n)])
    mu = np.array([m[0] for m in mus] + [m[1] for m in mus])
    return starts, stops, mu


def profile_loglik_oulc(series: Series, tau: int, cfg: NRConfig = DEFAULT_NR,
                        policy: TruncationPolicy = DEFAULT_POLICY):
    """Profile fit at a fixed change day: ``(params0, params1, loglik)``."""
    _check_tau(len(series), tau)
    starts, stops, mu = _segments_for(series, [tau])
    fits = _fit_segments(series, starts, stops, mu, cfg, policy)
    for seg, f in enumerate(fits):
        if isinstance(f, NoConvergence):
            f.segment = seg
            raise f
    p0 = SegmentParams(float(mu[0]), fits[0].sigma2)
    p1 = SegmentParams(float(mu[1]), fits[1].sigma2)
    return p0, p1, fits[0].loglik + fits[1].loglik


def best_tau(profile):
    """Index of the largest log-likelihood in ``[(tau, loglik), ...]``; first wins ties."""
    best = None
    for j, (_, ll) in enumerate(profile):
        if best is None or ll > profile[best][1]:
            best = j
    return best


def _tau_grid(n, taus):
    grid = list(range(3, n - 2)) if taus is None else sorted(set(int(t) for t in taus))
    for t in grid:
        _check_tau(n, t)
    return grid


def detect_oulc(series: Series, cfg: NRConfig = DEFAULT_NR,
                policy: TruncationPolicy = DEFAULT_POLICY,
                n_params: int = AIC_N_PARAMS, taus=None) -> ChangePointFit:
    """Scan every admissible change day with the OULC profile likelihood."""
    series.validate()
    n = len(series)
    grid = _tau_grid(n, taus)
    T = len(grid)
    starts, stops, mu = _segments_for(series, grid)
    fits = _fit_segments(series, starts, stops, mu, cfg, policy)

    profile = []
    index = []
    failures = {}
    for j, tau in enumerate(grid):
        f0, f1 = fits[j], fits[T + j]
        bad = [(seg, f) for seg, f in ((0, f0), (1, f1)) if isinstance(f, Exception)]
        if bad:
            failures[tau] = "; ".join(f"segment {seg}: {f}" for seg, f in bad)
            continue
        profile.append((tau, f0.loglik + f1.loglik))
        index.append(j)
    if not profile:
        raise AllTauFailed("every candidate change day failed to fit", failures)

    b = best_tau(profile)
    j = index[b]
    tau, ll = profile[b]
    f0, f1 = fits[j], fits[T + j]
    n_clamped = f0.n_clamped + f1.n_clamped
    diag = {
        "segments": [_seg_diag(f0), _seg_diag(f1)],
        "n_clamped": n_clamped,
        "clamp_warning": n_clamped > CLAMP_WARN_FRACTION * n,
        "failed_taus": failures,
        "profile": profile,
    }
    return ChangePointFit(tau_hat=tau, params0=SegmentParams(float(mu[j]), f0.sigma2),
                          params1=SegmentParams(float(mu[T + j]), f1.sigma2), loglik=ll,
                          aic=aic(ll, n_params), model=OULC, n=n, n_params=n_params,
                          diagnostics=diag)


def _seg_diag(f: SegmentFit) -> dict:
    return {"method": f.method, "iterations": f.iterations, "converged": f.converged,
            "grad": f.grad, "n_clamped": f.n_clamped}


def oc_profile(series: Series, tau: int):
    """Closed-form open/close fit at a fixed change day."""
    n = len(series)
    _check_tau(n, tau)
    m0, m1 = mu_hats(series, tau)
    z = series.diffs
    s0 = _oc_sigma2(z[:tau], m0)
    s1 = _oc_sigma2(z[tau:], m1)
    if not (s0 > 0 and s1 > 0):
        raise DegenerateSegment(f"zero variance segment at tau={tau}")
    p0, p1 = SegmentParams(m0, s0), SegmentParams(m1, s1)
    return p0, p1, loglik_oc(series, tau, p0, p1)


def detect_oc(series: Series, n_params: int = AIC_N_PARAMS, taus=None) -> ChangePointFit:
    """Open/close baseline: closed-form Gaussian fits scanned over tau."""
    series.validate()
    n = len(series)
    failures = {}
    profile = []
    params = []
    for tau in _tau_grid(n, taus):
        try:
            p0, p1, ll = oc_profile(series, tau)
        except DegenerateSegment as e:
            failures[tau] = str(e)
            continue
        profile.append((tau, ll))
        params.append((p0, p1))
    if not profile:
        raise DegenerateSegment("every candidate change day has a zero-variance segment")
    b = best_tau(profile)
    tau, ll = profile[b]
    p0, p1 = params[b]
    return ChangePointFit(tau_hat=tau, params0=p0, params1=p1, loglik=ll,
                          aic=aic(ll, n_params), model=OC, n=n, n_params=n_params,
                          diagnostics={"failed_taus": failures, "profile": profile})


def detect(series: Series, model: str, cfg: NRConfig = DEFAULT_NR,
           policy: TruncationPolicy = DEFAULT_POLICY, n_params: int = AIC_N_PARAMS):
    model = model.upper()
    if model == OULC:
        return detect_oulc(series, cfg, policy, n_params=n_params)
    if model == OC:
        return detect_oc(series, n_params=n_params)
    raise ValueError(f"unknown model {model!r}")


def oc_sigma2_closed_form(z, mu):
    """Mean squared deviation used as the open/close variance estimate."""
    return _oc_sigma2(np.asarray(z, dtype=np.float64), mu)


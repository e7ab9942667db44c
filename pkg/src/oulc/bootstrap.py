"""Parametric bootstrap for the change-point fit.

Each replicate re-simulates a full series from the fitted two-regime model,
anchored at the observed first open, and re-runs the same detector.
Percentile intervals come from order statistics of the replicate estimates;
the change day gets a highest-frequency set instead of an interval.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from ._parallel import pmap
from .data import Series
from .density import DEFAULT_POLICY, TruncationPolicy
from .errors import BootstrapExhausted, OulcError
from .estimate import DEFAULT_NR, OC, OULC, ChangePointFit, NRConfig, detect_oc, detect_oulc
from .simulate import SimSpec, simulate_series

PARAMS = ("mu0", "mu1", "sigma2_0", "sigma2_1")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 1000
    alpha: float = 0.05
    seed: int = 0
    substeps: int = 1000
    workers: int = 1
    retain: bool = False

    def __post_init__(self):
        if self.B < 2:
            raise ValueError("B must be >= 2")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    ci_mu0: tuple
    ci_mu1: tuple
    ci_sigma2_0: tuple
    ci_sigma2_1: tuple
    tau_set: tuple
    tau_set_mass: float
    B: int
    alpha: float
    attempts: int
    replicate_fits: Optional[list] = field(default=None, compare=False)

    @property
    def tau_range(self) -> tuple:
        return (min(self.tau_set), max(self.tau_set))


def replicate_seed(master: int, b: int, attempt: int = 0) -> int:
    """64-bit seed for replicate ``b`` (1-based), redraw number ``attempt``."""
    ss = np.random.SeedSequence(entropy=int(master) & (2 ** 64 - 1), spawn_key=(int(b), int(attempt)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def order_stat_indices(B: int, alpha: float) -> tuple[int, int]:
    """1-based positions ``ceil(alpha B / 2)`` and ``ceil(B (1 - alpha / 2))``."""
    lo = math.ceil(alpha * B / 2.0 - 1e-9)
    hi = math.ceil(B * (1.0 - alpha / 2.0) - 1e-9)
    return min(max(lo, 1), B), min(max(hi, 1), B)


def percentile_ci(values, alpha: float) -> tuple[float, float]:
    v = np.sort(np.asarray(values, dtype=np.float64))
    lo, hi = order_stat_indices(v.size, alpha)
    return float(v[lo - 1]), float(v[hi - 1])


def tau_confidence_set(tau_samples, alpha: float) -> tuple[list, float]:
    """Smallest set of change days whose bootstrap frequency reaches ``1 - alpha``.

    Days are taken by decreasing frequency, ties by increasing day.
    """
    samples = list(tau_samples)
    if not samples:
        raise ValueError("tau_samples must be non-empty")
    B = len(samples)
    counts = sorted(Counter(int(t) for t in samples).items(), key=lambda kv: (-kv[1], kv[0]))
    target = (1.0 - alpha) * B
    chosen = []
    total = 0
    for tau, cnt in counts:
        chosen.append(tau)
        total += cnt
        if total >= target - 1e-9 * B:
            break
    return sorted(chosen), total / B


def _default_detector(model, nr_cfg, policy):
    if model == OULC:
        return partial(detect_oulc, cfg=nr_cfg, policy=policy)
    if model == OC:
        return detect_oc
    raise ValueError(f"unknown model {model!r}")


def _replicate(b, *, spec_base, master, budget, simulator, detector):
    for attempt in range(budget):
        spec = SimSpec(seed=replicate_seed(master, b, attempt), **spec_base)
        try:
            fit = detector(simulator(spec))
        except OulcError:
            continue
        return fit.estimates, attempt + 1
    return None, budget


def bootstrap_ci(series: Series, fit: ChangePointFit, cfg: BootstrapConfig = BootstrapConfig(),
                 nr_cfg: NRConfig = DEFAULT_NR, policy: TruncationPolicy = DEFAULT_POLICY,
                 simulator: Callable[[SimSpec], Series] = simulate_series,
                 detector: Optional[Callable[[Series], ChangePointFit]] = None) -> BootstrapResult:
    """Percentile intervals and the change-day set from ``cfg.B`` replicates.

    A replicate whose re-estimation fails is redrawn from a fresh stream; more
    than ``10 B`` draws in total raises :class:`BootstrapExhausted`.
    """
    if detector is None:
        detector = _default_detector(fit.model, nr_cfg, policy)
    spec_base = dict(n=len(series), tau=fit.tau_hat, params0=fit.params0, params1=fit.params1,
                     o1=float(series.o[0]), substeps=cfg.substeps)
    budget = 10 * cfg.B
    job = partial(_replicate, spec_base=spec_base, master=cfg.seed, budget=budget,
                  simulator=simulator, detector=detector)
    results = pmap(job, range(1, cfg.B + 1), workers=cfg.workers)
    attempts = sum(a for _, a in results)
    if attempts > budget or any(est is None for est, _ in results):
        raise BootstrapExhausted(f"{attempts} draws exceeded the budget of {budget}")

    ests = [est for est, _ in results]
    cis = {p: percentile_ci([e[p] for e in ests], cfg.alpha) for p in PARAMS}
    tau_set, mass = tau_confidence_set([e["tau"] for e in ests], cfg.alpha)
    return BootstrapResult(ci_mu0=cis["mu0"], ci_mu1=cis["mu1"], ci_sigma2_0=cis["sigma2_0"],
                           ci_sigma2_1=cis["sigma2_1"], tau_set=tuple(tau_set),
                           tau_set_mass=mass, B=cfg.B, alpha=cfg.alpha, attempts=attempts,
                           replicate_fits=ests if cfg.retain else None)

"""Monte Carlo comparison of the two detectors on simulated scenarios."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Mapping, Optional

import numpy as np

from ._parallel import pmap
from .data import SegmentParams
from .density import DEFAULT_POLICY, TruncationPolicy
from .errors import OulcError
from .estimate import DEFAULT_NR, OC, OULC, NRConfig, detect_oc, detect_oulc
from .simulate import SimSpec, simulate_series

PARAMS = ("mu0", "mu1", "sigma2_0", "sigma2_1", "tau")
METRICS_FIELDS = ("scenario", "model", "parameter", "true", "mean", "rmse", "re", "n_ok", "n_failed")


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    tau_true: int
    params0: SegmentParams
    params1: SegmentParams
    R: int
    seed: int = 0
    models: tuple = (OULC, OC)
    substeps: int = 1000
    o1: float = 0.0
    name: str = "scenario"

    def __post_init__(self):
        if not 3 <= self.tau_true <= self.n - 3:
            raise ValueError(f"need 3 <= tau_true <= n - 3, got {self.tau_true}")
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if self.substeps < 2:
            raise ValueError("substeps must be >= 2")
        models = tuple(m.upper() for m in self.models)
        if not models or any(m not in (OULC, OC) for m in models):
            raise ValueError(f"models must be a non-empty subset of {{OULC, OC}}, got {self.models}")
        object.__setattr__(self, "models", models)

    @property
    def truth(self) -> dict:
        return {"mu0": self.params0.mu, "mu1": self.params1.mu, "sigma2_0": self.params0.sigma2,
                "sigma2_1": self.params1.sigma2, "tau": self.tau_true}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScenarioSpec":
        return cls(n=int(d["n"]), tau_true=int(d["tau"]),
                   params0=SegmentParams(float(d["mu0"]), float(d["sigma2_0"])),
                   params1=SegmentParams(float(d["mu1"]), float(d["sigma2_1"])),
                   R=int(d["R"]), seed=int(d.get("seed", 0)),
                   models=tuple(d.get("models", (OULC, OC))),
                   substeps=int(d.get("substeps", 1000)), o1=float(d.get("o1", 0.0)),
                   name=str(d.get("name", "scenario")))

    def sim_spec(self, r: int) -> SimSpec:
        return SimSpec(n=self.n, tau=self.tau_true, params0=self.params0, params1=self.params1,
                       o1=self.o1, substeps=self.substeps, seed=replicate_seed(self.seed, r))


def replicate_seed(master: int, r: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master) & (2 ** 64 - 1), spawn_key=(int(r),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ParamMetrics:
    true: float
    mean: float
    rmse: float
    re: float


@dataclass(frozen=True)
class ScenarioMetrics:
    spec: ScenarioSpec
    metrics: dict  # model -> parameter -> ParamMetrics
    failures: dict  # model -> count
    raw: dict = field(default_factory=dict, compare=False)  # model -> list of estimate dicts or None

    def rows(self) -> list[dict]:
        out = []
        for model, per in self.metrics.items():
            n_failed = self.failures[model]
            for p in PARAMS:
                m = per[p]
                out.append({"scenario": self.spec.name, "model": model, "parameter": p,
                            "true": m.true, "mean": m.mean, "rmse": m.rmse, "re": m.re,
                            "n_ok": self.spec.R - n_failed, "n_failed": n_failed})
        return out

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "scenario": s.name, "n": s.n, "tau": s.tau_true, "R": s.R, "seed": s.seed,
            "substeps": s.substeps, "truth": s.truth,
            "models": {model: {"failures": self.failures[model],
                               "parameters": {p: vars(m) for p, m in per.items()}}
                       for model, per in self.metrics.items()},
        }


def summarize(estimates: list, truth: Mapping) -> dict:
    """Mean, RMSE and RE per parameter over successful replicates."""
    out = {}
    for p in PARAMS:
        t = float(truth[p])
        vals = np.array([e[p] for e in estimates], dtype=np.float64)
        if vals.size == 0:
            out[p] = ParamMetrics(t, math.nan, math.nan, math.nan)
            continue
        rmse = float(np.sqrt(np.mean((vals - t) ** 2)))
        re = rmse / abs(t) if t != 0 else math.nan
        out[p] = ParamMetrics(t, float(vals.mean()), rmse, re)
    return out


def default_detectors(nr_cfg: NRConfig = DEFAULT_NR,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> dict:
    return {OULC: partial(detect_oulc, cfg=nr_cfg, policy=policy), OC: detect_oc}


def _replicate(r, *, spec, detectors, simulator):
    series = simulator(spec.sim_spec(r))
    out = {}
    for model in spec.models:
        try:
            out[model] = detectors[model](series).estimates
        except OulcError:
            out[model] = None
    return out


def run_scenario(spec: ScenarioSpec, nr_cfg: NRConfig = DEFAULT_NR,
                 policy: TruncationPolicy = DEFAULT_POLICY, workers: int = 1,
                 detectors: Optional[Mapping[str, Callable]] = None,
                 simulator: Callable = simulate_series) -> ScenarioMetrics:
    """Simulate ``spec.R`` series and score each requested detector.

    Every model sees the same simulated series in a given replicate. Failed
    fits are excluded from the moments and counted.
    """
    dets = default_detectors(nr_cfg, policy)
    if detectors:
        dets.update({k.upper(): v for k, v in detectors.items()})
    job = partial(_replicate, spec=spec, detectors=dets, simulator=simulator)
    reps = pmap(job, range(1, spec.R + 1), workers=workers)
    metrics, failures, raw = {}, {}, {}
    for model in spec.models:
        col = [rep[model] for rep in reps]
        ok = [e for e in col if e is not None]
        metrics[model] = summarize(ok, spec.truth)
        failures[model] = len(col) - len(ok)
        raw[model] = col
    return ScenarioMetrics(spec=spec, metrics=metrics, failures=failures, raw=raw)


def metrics_csv(results: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=METRICS_FIELDS, lineterminator="\n")
    w.writeheader()
    for res in results:
        for row in res.rows():
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def raw_csv(results: list) -> str:
    """Per-replicate estimates, one row per (scenario, replicate, model)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario", "replicate", "model", "ok") + PARAMS)
    for res in results:
        for model, col in res.raw.items():
            for r, est in enumerate(col, start=1):
                if est is None:
                    w.writerow((res.spec.name, r, model, 0) + ("",) * len(PARAMS))
                else:
                    w.writerow((res.spec.name, r, model, 1)
                               + tuple(repr(float(est[p])) if p != "tau" else est[p] for p in PARAMS))
    return buf.getvalue()

import json
import math

import pytest

from oulc import SegmentParams
from oulc.bench import (ParamMetrics, ScenarioSpec, metrics_csv, raw_csv, replicate_seed,
                        run_scenario, summarize)
from oulc.errors import NoConvergence

P0, P1 = SegmentParams(0.0008, 0.000169), SegmentParams(0.0008, 0.000784)


def _spec(**kw):
    base = dict(n=30, tau_true=10, params0=P0, params1=P1, R=4, seed=1, substeps=50, name="t")
    base.update(kw)
    return ScenarioSpec(**base)


def test_truthful_detector_scores_zero():
    spec = _spec(R=3)

    class Truth:
        estimates = spec.truth

    res = run_scenario(spec, detectors={"OULC": lambda s: Truth, "OC": lambda s: Truth})
    for per in res.metrics.values():
        for m in per.values():
            assert m.rmse == 0.0 and m.re == 0.0
    assert res.failures == {"OULC": 0, "OC": 0}


def test_hand_computed_tau_metrics():
    truth = {"mu0": 0.001, "mu1": 0.002, "sigma2_0": 1e-4, "sigma2_1": 4e-4, "tau": 25}
    ests = [dict(truth, tau=t) for t in (24, 25, 26)]
    m = summarize(ests, truth)["tau"]
    assert m.mean == 25.0
    assert m.rmse == pytest.approx(math.sqrt(2 / 3), rel=1e-15)
    assert m.re == pytest.approx(0.03265986324, rel=1e-9)


def test_re_times_truth_is_rmse():
    res = run_scenario(_spec())
    for per in res.metrics.values():
        for m in per.values():
            assert m.rmse >= 0
            assert m.re * abs(m.true) == pytest.approx(m.rmse, rel=1e-15)


def test_zero_truth_has_undefined_re():
    m = summarize([{"mu0": 0.1, "mu1": 0, "sigma2_0": 1, "sigma2_1": 1, "tau": 3}],
                  {"mu0": 0.0, "mu1": 0, "sigma2_0": 1, "sigma2_1": 1, "tau": 3})
    assert m["mu0"].rmse == 0.1 and math.isnan(m["mu0"].re)
    assert all(math.isnan(x) for x in vars(summarize([], {p: 1 for p in m})["tau"]).values()
               if x != 1)


def test_failures_are_excluded_and_counted():
    spec = _spec(R=5, models=("oulc",))
    calls = []

    def flaky(series):
        calls.append(1)
        if len(calls) in (2, 4):
            raise NoConvergence("forced")
        from oulc import detect_oulc
        return detect_oulc(series)

    res = run_scenario(spec, detectors={"oulc": flaky})
    assert res.failures == {"OULC": 2}
    assert [e is None for e in res.raw["OULC"]] == [False, True, False, True, False]
    rows = res.rows()
    assert {r["n_ok"] for r in rows} == {3} and {r["n_failed"] for r in rows} == {2}


def test_models_see_the_same_series():
    spec = _spec(R=2)
    seen = {"OULC": [], "OC": []}

    def spy(model):
        def det(series):
            seen[model].append(series.as_array().tobytes())
            raise NoConvergence("skip")
        return det

    run_scenario(spec, detectors={"OULC": spy("OULC"), "OC": spy("OC")})
    assert seen["OULC"] == seen["OC"] and len(set(seen["OC"])) == 2


def test_seed_determinism_and_worker_independence():
    spec = _spec(R=3)
    a = run_scenario(spec)
    b = run_scenario(spec, workers=2)
    assert metrics_csv([a]) == metrics_csv([b])
    assert raw_csv([a]) == raw_csv([b])
    assert metrics_csv([run_scenario(_spec(R=3, seed=2))]) != metrics_csv([a])


def test_outputs():
    res = run_scenario(_spec(R=2))
    lines = metrics_csv([res]).splitlines()
    assert lines[0] == "scenario,model,parameter,true,mean,rmse,re,n_ok,n_failed"
    assert len(lines) == 1 + 2 * 5
    raw = raw_csv([res]).splitlines()
    assert raw[0].startswith("scenario,replicate,model,ok,mu0") and len(raw) == 1 + 2 * 2
    d = json.loads(json.dumps(res.to_dict()))
    assert set(d["models"]) == {"OULC", "OC"} and d["truth"]["tau"] == 10
    assert isinstance(res.metrics["OC"]["tau"], ParamMetrics)


def test_spec_from_dict_and_validation():
    s = ScenarioSpec.from_dict({"n": 250, "tau": 25, "mu0": 0.0008, "mu1": 0.0008,
                                "sigma2_0": 0.000169, "sigma2_1": 0.000784, "R": 5,
                                "models": ["oc"]})
    assert s.models == ("OC",) and s.substeps == 1000 and s.seed == 0
    assert s.sim_spec(1).seed == replicate_seed(0, 1) != s.sim_spec(2).seed
    for kw in (dict(R=0), dict(tau_true=2), dict(models=("x",)), dict(models=()), dict(substeps=1)):
        with pytest.raises(ValueError):
            _spec(**kw)

import math
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from oulc import BootstrapConfig, bootstrap_ci, detect_oc, detect_oulc
from oulc.bootstrap import order_stat_indices, percentile_ci, replicate_seed, tau_confidence_set
from oulc.errors import BootstrapExhausted, DegenerateSegment

from conftest import sim


def test_order_statistic_positions():
    assert order_stat_indices(1000, 0.05) == (25, 975)
    assert order_stat_indices(100, 0.10) == (5, 95)
    assert order_stat_indices(40, 0.05) == (1, 39)
    assert order_stat_indices(2, 0.5) == (1, 2)


@given(B=st.integers(2, 5000), alpha=st.floats(0.001, 0.999))
def test_order_statistic_positions_in_range(B, alpha):
    lo, hi = order_stat_indices(B, alpha)
    assert 1 <= lo <= hi <= B
    assert lo >= alpha * B / 2 - 1e-6 or lo == 1
    assert hi >= B * (1 - alpha / 2) - 1e-6 or hi == B


def test_percentile_ci_reads_order_statistics():
    vals = list(range(1000, 0, -1))
    assert percentile_ci(vals, 0.05) == (25.0, 975.0)


def test_tau_set_examples():
    s = [25] * 900 + [26] * 60 + [24] * 40
    assert tau_confidence_set(s, 0.05) == ([25, 26], pytest.approx(0.96))
    s = [10] * 500 + [20] * 450 + [30] * 50
    assert tau_confidence_set(s, 0.05) == ([10, 20], pytest.approx(0.95))
    assert tau_confidence_set([7] * 10, 0.05) == ([7], 1.0)
    with pytest.raises(ValueError):
        tau_confidence_set([], 0.05)


def test_tau_set_breaks_ties_toward_smaller_day():
    assert tau_confidence_set([5, 5, 9, 9, 3, 3, 3, 3], 0.5)[0] == [3]
    assert tau_confidence_set([9, 9, 5, 5], 0.6)[0] == [5]
    assert tau_confidence_set([5, 5, 9, 9], 0.4)[0] == [5, 9]
    assert tau_confidence_set([9, 9, 5, 5, 1], 0.65)[0] == [5]


@given(samples=st.lists(st.integers(3, 40), min_size=1, max_size=300),
       alpha=st.floats(0.01, 0.99))
def test_tau_set_is_minimal_and_reaches_mass(samples, alpha):
    chosen, mass = tau_confidence_set(samples, alpha)
    B = len(samples)
    counts = Counter(samples)
    assert mass == sum(counts[t] for t in chosen) / B
    assert mass >= 1 - alpha - 1e-9
    # no smaller set reaches the target: the top len-1 frequencies fall short
    top = sorted(counts.values(), reverse=True)[: len(chosen) - 1]
    assert sum(top) / B < 1 - alpha - 1e-9
    # every chosen day is at least as frequent as every excluded one
    out = [counts[t] for t in counts if t not in chosen]
    assert not out or min(counts[t] for t in chosen) >= max(out)


@given(samples=st.lists(st.integers(3, 20), min_size=1, max_size=200),
       a1=st.floats(0.01, 0.99), a2=st.floats(0.01, 0.99))
def test_tau_set_shrinks_as_alpha_grows(samples, a1, a2):
    lo, hi = sorted((a1, a2))
    assert set(tau_confidence_set(samples, hi)[0]) <= set(tau_confidence_set(samples, lo)[0])


def test_replicate_seeds_distinct():
    seeds = {replicate_seed(0, b, a) for b in range(1, 200) for a in range(3)}
    assert len(seeds) == 199 * 3
    assert replicate_seed(1, 1) != replicate_seed(0, 1)


def test_config_validation():
    for kw in (dict(B=1), dict(alpha=0.0), dict(alpha=1.0)):
        with pytest.raises(ValueError):
            BootstrapConfig(**kw)


def test_replaying_the_data_gives_point_intervals():
    s = sim(n=30, tau=10, seed=2)
    fit = detect_oulc(s)
    res = bootstrap_ci(s, fit, BootstrapConfig(B=5), simulator=lambda spec: s)
    for ci, v in ((res.ci_mu0, fit.params0.mu), (res.ci_sigma2_1, fit.params1.sigma2)):
        assert ci == (v, v)
    assert res.tau_set == (fit.tau_hat,) and res.tau_set_mass == 1.0
    assert res.attempts == 5


def test_failed_replicates_are_redrawn():
    s = sim(n=30, tau=10, seed=2)
    fit = detect_oc(s)
    calls = []

    def flaky(series):
        calls.append(1)
        if len(calls) % 3 == 0:
            raise DegenerateSegment("forced")
        return detect_oc(series)

    res = bootstrap_ci(s, fit, BootstrapConfig(B=6, substeps=20), detector=flaky)
    assert res.attempts == len(calls) > 6


def test_redraw_budget_exhausted():
    s = sim(n=30, tau=10, seed=2)

    def always_fails(series):
        raise DegenerateSegment("forced")

    with pytest.raises(BootstrapExhausted):
        bootstrap_ci(s, detect_oc(s), BootstrapConfig(B=3, substeps=10), detector=always_fails)


def test_intervals_contain_their_estimates_and_are_reproducible():
    s = sim(n=40, tau=15, seed=4)
    fit = detect_oulc(s)
    cfg = BootstrapConfig(B=20, seed=11, substeps=50, retain=True)
    a = bootstrap_ci(s, fit, cfg)
    b = bootstrap_ci(s, fit, cfg)
    assert a == b and a.replicate_fits == b.replicate_fits
    for p, ci in (("mu0", a.ci_mu0), ("sigma2_0", a.ci_sigma2_0), ("sigma2_1", a.ci_sigma2_1)):
        vals = sorted(e[p] for e in a.replicate_fits)
        assert ci == (vals[0], vals[-1])  # positions ceil(0.5) = 1 and ceil(19.5) = 20
    assert all(math.isfinite(x) for x in a.ci_mu1)
    assert a.tau_range[0] <= a.tau_range[1]


def test_worker_count_does_not_change_result():
    s = sim(n=30, tau=10, seed=6)
    fit = detect_oulc(s)
    one = bootstrap_ci(s, fit, BootstrapConfig(B=6, seed=3, substeps=50, workers=1, retain=True))
    two = bootstrap_ci(s, fit, BootstrapConfig(B=6, seed=3, substeps=50, workers=2, retain=True))
    assert one == two and one.replicate_fits == two.replicate_fits

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from oulc import SegmentParams, SimSpec, simulate_series  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SIGMA_SCENARIO = (SegmentParams(0.0008, 0.000169), SegmentParams(0.0008, 0.000784))
MU_SCENARIO = (SegmentParams(0.0008, 0.000169), SegmentParams(0.004, 0.000169))


def sim(n=60, tau=20, p0=SIGMA_SCENARIO[0], p1=SIGMA_SCENARIO[1], seed=0, substeps=200, o1=0.0):
    return simulate_series(SimSpec(n=n, tau=tau, params0=p0, params1=p1, seed=seed,
                                   substeps=substeps, o1=o1))


def dyadic(series, bits=20):
    """Round every value to a multiple of 2**-bits (so level shifts are exact)."""
    q = 2.0 ** bits
    from oulc import Series
    cols = [np.round(np.asarray(x) * q) / q for x in (series.o, series.u, series.l, series.c)]
    return Series(*cols)


@pytest.fixture
def small_series():
    return sim()


# acceptance reporting: one verdict line per criterion at the end of the run

_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    ok, _, notes = _VERDICTS.get(number, (True, title, []))
    notes = notes + list(getattr(item, "criterion_notes", []))
    _VERDICTS[number] = (ok and rep.passed, title, notes)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        ok, title, notes = _VERDICTS[number]
        detail = f" [{'; '.join(notes)}]" if notes else ""
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {number}. {title}{detail}")


@pytest.fixture
def note(request):
    """Attach a short measurement to this criterion's verdict line."""
    request.node.criterion_notes = []
    return request.node.criterion_notes.append

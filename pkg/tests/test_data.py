import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oulc import IntervalBar, SegmentParams, Series
from oulc.errors import InvalidBar, InvalidParams, SeriesTooShort

from conftest import sim


def test_bar_ordering_enforced():
    IntervalBar(0.0, 1.0, -1.0, 0.5)
    with pytest.raises(InvalidBar):
        IntervalBar(0.0, 0.4, -1.0, 0.5)  # close above high
    with pytest.raises(InvalidBar):
        IntervalBar(0.0, 1.0, 0.1, 0.5)  # open below low


def test_zero_range_and_nonfinite_rejected():
    with pytest.raises(InvalidBar):
        IntervalBar(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidBar):
        IntervalBar(0.0, math.inf, -1.0, 0.0)
    with pytest.raises(InvalidBar):
        IntervalBar(math.nan, 1.0, -1.0, 0.0)


@pytest.mark.parametrize("mu,s2", [(0.0, 0.0), (0.0, -1.0), (math.nan, 1.0), (0.0, math.inf)])
def test_params_validated(mu, s2):
    with pytest.raises(InvalidParams):
        SegmentParams(mu, s2)


def test_params_scaled():
    assert SegmentParams(0.1, 0.04).scaled(2.0) == SegmentParams(0.2, 0.16)


@given(st.floats(-5, 5), st.floats(0.01, 3), st.floats(0.01, 3), st.floats(0, 1), st.floats(0, 1))
def test_reflected_bar_is_valid(o, up, down, a, b):
    u, l = o + up, o - down  # noqa: E741
    c = min(max(l + (u - l) * a, l), u)
    bar = IntervalBar(o, u, l, c)
    r = bar.reflected()
    assert (r.o, r.u, r.l, r.c) == (-o, -l, -u, -c)
    assert r.reflected() == bar


def test_series_min_length():
    s = sim(n=10, tau=4)
    with pytest.raises(SeriesTooShort):
        s.segment(0, 6).validate()
    s.segment(0, 7).validate()


def test_series_columns_read_only_and_copied():
    o = np.zeros(7)
    s = Series(o, o + 1, o - 1, o)
    o[0] = 5.0
    assert s.o[0] == 0.0
    with pytest.raises(ValueError):
        s.o[0] = 1.0


def test_series_reports_first_bad_bar():
    o = np.zeros(8)
    c = o.copy()
    c[4] = 2.0
    with pytest.raises(InvalidBar, match="bar 5"):
        Series(o, o + 1, o - 1, c)


def test_series_round_trips_through_bars(small_series):
    again = Series.from_bars(small_series.bars)
    assert again == small_series
    assert np.array_equal(small_series.as_array()[:, 0], small_series.o)
    assert np.array_equal(small_series.diffs, small_series.c - small_series.o)

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from intersim.dynamics import VehicleParams
from intersim.geometry import Direction, IntersectionGeometry
from intersim.metrics import (
    DelayInconsistency,
    DelayRecord,
    cdf,
    delay_of,
    exceedance_fraction,
    median,
    quantile,
    summarize,
)

G = IntersectionGeometry()
P = VehicleParams()


def test_free_flow_is_zero_delay():
    assert G.path_length / P.max_speed == pytest.approx(533.8)
    assert delay_of(100.0, 633.8, G, P) == pytest.approx(0.0, abs=1e-9)


def test_additivity():
    assert delay_of(0.0, 563.8, G, P) == pytest.approx(30.0)


def test_exit_before_spawn_is_error():
    with pytest.raises(DelayInconsistency):
        delay_of(10.0, 9.0, G, P)


def test_negative_slack_clamped_within_one_tick():
    assert delay_of(0.0, 533.75, G, P) == 0.0
    with pytest.raises(DelayInconsistency):
        delay_of(0.0, 533.5, G, P)


def test_delay_depends_only_on_total_path_length():
    # moving the approach/departure split leaves the metric unchanged
    a = delay_of(0.0, 600.0, IntersectionGeometry(4000, 3.5), P)
    b = delay_of(0.0, 600.0, IntersectionGeometry(4000, 3.5), P)
    assert a == b


def test_median_lower_convention():
    assert median([0, 0, 10]) == 0
    assert median([1, 2, 3, 4]) == 2


def test_quantile_enumeration_oracle():
    data = list(range(1, 101))
    # oracle: smallest x with #{d <= x} / n >= q
    for q in (0.01, 0.3, 0.5, 0.99, 1.0):
        expected = min(x for x in data if sum(d <= x for d in data) / len(data) >= q)
        assert quantile(cdf(data), q) == expected
    assert quantile(cdf(data), 0.3) == 30


def test_cdf_boundaries():
    c = cdf([0, 3, 7])
    assert c(-1) == 0.0
    assert c(7) == 1.0
    assert c(3) == pytest.approx(2 / 3)


def test_empty_inputs():
    with pytest.raises(ValueError):
        quantile(cdf([]), 0.5)
    with pytest.raises(ValueError):
        cdf([])(0.0)
    with pytest.raises(ValueError):
        exceedance_fraction([], 20)


def test_exceedance():
    assert exceedance_fraction([0, 0, 0], 20) == 0
    assert exceedance_fraction([10, 25, 30], 20) == pytest.approx(2 / 3)


def test_table_is_plottable_step_function():
    tab = cdf([5, 1, 1, 3]).table()
    assert tab == [(1.0, 0.5), (3.0, 0.75), (5.0, 1.0)]


samples = st.lists(st.floats(0, 1e4, allow_nan=False), min_size=1, max_size=200)


@given(samples)
def test_cdf_monotone_and_round_trip(xs):
    c = cdf(xs)
    values = sorted(xs)
    assert all(c(a) <= c(b) for a, b in zip(values, values[1:]))
    assert c(values[-1]) == 1.0
    n = len(xs)
    for k in range(n + 1):
        q = k / n
        assert c(quantile(c, q)) >= q - 1e-12


@given(samples, samples)
def test_pooling_is_associative(a, b):
    assert cdf(a + b).table() == cdf(sorted(b) + sorted(a)).table()
    assert median(a + b) == quantile(cdf(list(cdf(a).values) + list(cdf(b).values)), 0.5)


def test_summary_scopes():
    rng = random.Random(3)
    recs = [DelayRecord(i, Direction(1 + i % 4), 0.0, 0.0, rng.uniform(0, 40)) for i in range(40)]
    rows = summarize(recs)
    assert [r["scope"] for r in rows] == ["pooled", "dir1", "dir2", "dir3", "dir4"]
    assert rows[0]["count"] == 40 and sum(r["count"] for r in rows[1:]) == 40
    assert rows[0]["max"] == max(r.delay for r in recs)

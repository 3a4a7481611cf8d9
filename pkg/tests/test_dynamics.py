import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intersim.dynamics import (
    HeadwayInconsistency,
    VehicleParams,
    VehicleState,
    car_following_accel,
    clear_time,
    eta_to,
    step,
    stopping_distance,
)
from intersim.geometry import Direction, IntersectionGeometry
from oracles import fine_stopping_distance, tick_eta, tick_stopping_distance

P = VehicleParams()
G = IntersectionGeometry()


def at(x, v, vid=0, d=Direction.D1):
    return VehicleState(vid, d, x, v)


class TestStep:
    def test_constant_max_speed(self):
        s = step(at(100.0, 15.0), 0.0, P)
        assert s.speed == 15.0
        assert s.front_pos == pytest.approx(101.5)

    def test_from_rest(self):
        s = step(at(0.0, 0.0), 10.0, P)
        assert s.speed == pytest.approx(1.0)
        assert s.front_pos == pytest.approx(0.1)

    def test_clamps_at_max_speed(self):
        s = step(at(0.0, 15.0), 10.0, P)
        assert s.speed == 15.0
        assert s.front_pos == pytest.approx(1.5)

    @pytest.mark.parametrize("bad", [math.nan, math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            step(at(bad, 1.0), 0.0, P)
        with pytest.raises(ValueError):
            step(at(0.0, 1.0), bad, P)

    def test_rejects_out_of_bounds_command(self):
        with pytest.raises(ValueError):
            step(at(0.0, 1.0), 10.5, P)

    @given(
        x=st.floats(0, 8000), v=st.floats(0, 15),
        a=st.sampled_from([-10.0, 0.0, 10.0]) | st.floats(-10, 10),
    )
    def test_speed_bounded_and_no_reversing(self, x, v, a):
        s = step(at(x, v), a, P)
        assert 0.0 <= s.speed <= P.max_speed
        assert s.front_pos >= x


class TestStoppingDistance:
    def test_examples(self):
        assert stopping_distance(15, 10) == pytest.approx(11.25)
        assert stopping_distance(0, 10) == 0.0
        assert stopping_distance(7.5, 10) == pytest.approx(2.8125)

    @pytest.mark.parametrize("v", [15.0, 7.5, 3.3, 0.4])
    def test_matches_fine_integration(self, v):
        assert stopping_distance(v, 10) == pytest.approx(fine_stopping_distance(v, 10), abs=1e-6)

    def test_tick_level_stop_within_one_tick_of_travel(self):
        # semi-implicit braking from max speed
        assert abs(tick_stopping_distance(15, 10) - stopping_distance(15, 10)) <= 1.5


class TestEta:
    def test_at_max_speed(self):
        assert eta_to(at(0, 15), 30, P) == pytest.approx(2.0)

    def test_from_rest(self):
        assert eta_to(at(0, 0), 11.25, P) == pytest.approx(1.5)

    def test_accelerate_then_cruise(self):
        assert eta_to(at(0, 10), 100, P) == pytest.approx(6.75)

    def test_zero_distance(self):
        assert eta_to(at(50, 3), 50, P) == 0.0

    def test_oracle_on_examples(self):
        assert abs(tick_eta(0, 0, 11.25) - 1.5) <= 0.1 + 1e-9
        assert abs(tick_eta(0, 10, 100) - 6.75) <= 0.1 + 1e-9


class TestClearTime:
    def test_entering_at_speed(self):
        assert clear_time(at(G.entry_line, 15), G.exit_line, P) == pytest.approx(0.8)

    def test_already_clear(self):
        assert clear_time(at(G.exit_line + 5.1, 15), G.exit_line, P) == 0.0

    def test_from_rest_at_entry_line(self):
        t = clear_time(at(G.entry_line, 0), G.exit_line, P)
        assert t == pytest.approx(1.55)
        assert abs(tick_eta(G.entry_line, 0, G.exit_line + P.length) - t) <= 0.1 + 1e-9


@settings(max_examples=300)
@given(x=st.floats(0, 4000), v=st.floats(0, 15), dist=st.floats(0, 400))
def test_eta_matches_tick_oracle(x, v, dist):
    s = at(x, v)
    assert abs(eta_to(s, x + dist, P) - tick_eta(x, v, x + dist)) <= 0.1 + 1e-9


class TestCarFollowing:
    def test_free_road(self):
        assert car_following_accel(at(0, 10), P) == 10.0

    def test_distant_leader(self):
        leader = at(205.0, 15.0, vid=1)  # rear 100 m ahead of follower front
        assert car_following_accel(at(100.0, 15.0), P, leader=leader) == 10.0

    def test_stop_target_at_stopping_distance(self):
        assert car_following_accel(at(0.0, 15.0), P, stop_target=11.25) == -10.0

    def test_stops_at_target_within_one_tick_of_travel(self):
        s = at(0.0, 15.0)
        for _ in range(100):
            s = step(s, car_following_accel(s, P, stop_target=11.25), P)
        assert s.speed == 0.0
        assert 11.25 - 1.5 <= s.front_pos <= 11.25

    def test_more_restrictive_of_leader_and_target(self):
        leader = at(500.0, 15.0, vid=1)
        assert car_following_accel(at(0.0, 15.0), P, leader=leader, stop_target=11.25) == -10.0

    def test_inconsistency_when_gap_already_violated(self):
        leader = at(20.0, 0.0, vid=1)
        with pytest.raises(HeadwayInconsistency):
            car_following_accel(at(0.0, 15.0), P, leader=leader)


@settings(max_examples=200, deadline=None)
@given(
    v_lead=st.floats(0, 15), v_follow=st.floats(0, 15), slack=st.floats(0, 60),
    commands=st.lists(st.sampled_from([-10.0, 0.0, 10.0]), min_size=1, max_size=400),
)
def test_headway_floor_under_arbitrary_leader(v_lead, v_follow, slack, commands):
    """Warm start (gap minus stopping surplus >= 30) keeps the gap >= 28.5 m."""
    surplus = max(0.0, (v_follow**2 - v_lead**2) / 20.0)
    follower = at(0.0, v_follow)
    leader = at(P.length + 30.0 + surplus + slack, v_lead, vid=1)
    for a in commands:
        cmd = car_following_accel(follower, P, leader=leader)
        leader = step(leader, a, P)
        follower = step(follower, cmd, P)
        gap = leader.front_pos - P.length - follower.front_pos
        assert gap >= 28.5 - 1e-9

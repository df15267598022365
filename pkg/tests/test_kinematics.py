from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prtsim.kinematics import (
    MotionLimits,
    RouteExhausted,
    VehicleState,
    eta_to_point,
    next_speed,
    safe_follow_speed,
    safe_step_speed,
    step_vehicle,
)

LIM = MotionLimits()


def test_safe_follow_speed_examples():
    assert safe_follow_speed(10.0, LIM) == 0.0
    assert safe_follow_speed(110.0, LIM) == pytest.approx(20.0)
    assert safe_follow_speed(0.0, LIM) == 0.0


def test_limits_reject_coarse_tick():
    MotionLimits().check(15.0)
    with pytest.raises(ValueError):
        MotionLimits(dt=1.0).check(15.0)
    with pytest.raises(ValueError):
        MotionLimits(a_max=0).check()


def _state(speed, route=(("s", 1000.0, 15.0),), offset=0.0):
    return VehicleState(vid=0, route=list(route), offset=offset, speed=speed)


def test_step_from_rest():
    s = step_vehicle(_state(0.0), 15.0, LIM)
    assert s.speed == pytest.approx(0.2)
    assert s.offset == pytest.approx(0.01)


def test_step_steady_state():
    s = step_vehicle(_state(10.0), 10.0, LIM)
    assert s.speed == pytest.approx(10.0)
    assert s.offset == pytest.approx(1.0)


def test_step_one_brake():
    assert step_vehicle(_state(10.0), 0.0, LIM).speed == pytest.approx(9.8)


def test_step_respects_speed_factor_cap():
    s = _state(5.0)
    s.speed_factor = 0.5
    for _ in range(100):
        s = step_vehicle(s, 100.0, LIM)
    assert s.speed == pytest.approx(7.5)


def test_step_carries_remainder_to_next_segment():
    s = _state(10.0, route=(("a", 20.0, 10.0), ("b", 50.0, 10.0)), offset=19.5)
    s = step_vehicle(s, 10.0, LIM)
    assert s.segment == "b"
    assert s.offset == pytest.approx(0.5)


def test_step_past_route_end_raises():
    with pytest.raises(RouteExhausted):
        step_vehicle(_state(10.0, route=(("a", 20.0, 10.0),), offset=19.5), 10.0, LIM)


def test_step_rejects_negative_allowed():
    with pytest.raises(ValueError):
        step_vehicle(_state(1.0), -1.0, LIM)


def test_eta_examples():
    assert eta_to_point(5.0, 0.0, 10.0, LIM) == 0.0
    assert eta_to_point(10.0, 100.0, 10.0, LIM) == pytest.approx(10.0)
    assert eta_to_point(0.0, 100.0, 10.0, LIM) == pytest.approx(12.5)


def numeric_eta(v, distance, cap, a, h=1e-4):
    """Forward-integrated two-phase profile, independent of the closed form."""
    t = x = 0.0
    while x < distance:
        nv = min(cap, v + a * h) if v < cap else v
        x += 0.5 * (v + nv) * h
        v = nv
        t += h
    return t


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.0, 15.0),
    st.floats(0.5, 300.0),
    st.floats(1.0, 15.0),
)
def test_eta_matches_numeric_profile(v, d, cap):
    assert eta_to_point(v, d, cap, LIM) == pytest.approx(numeric_eta(v, d, cap, LIM.a_max), abs=2e-3)


@given(st.floats(0.0, 15.0), st.floats(0.0, 200.0), st.floats(0.0, 50.0), st.floats(1.0, 15.0))
def test_eta_monotone(v, d, extra, cap):
    assert eta_to_point(v, d + extra, cap, LIM) >= eta_to_point(v, d, cap, LIM) - 1e-9
    if v < cap:
        assert eta_to_point(min(cap, v + 1.0), d, cap, LIM) <= eta_to_point(v, d, cap, LIM) + 1e-9


@given(st.floats(0.0, 20.0), st.floats(-5.0, 30.0))
def test_next_speed_bounded_change(v, allowed):
    nv = next_speed(v, max(0.0, allowed), 15.0, LIM)
    assert 0.0 <= nv <= 15.0
    if v <= 15.0:
        assert abs(nv - v) <= LIM.a_max * LIM.dt + 1e-12


@settings(max_examples=200)
@given(st.floats(0.0, 15.0), st.floats(0.0, 300.0))
def test_safe_step_speed_stops_within_room(v0, room):
    """The per-tick rule plus the engine's displacement clamp never overruns a
    fixed stop point and never needs more than ``a_max * dt`` of braking per tick,
    provided the vehicle starts somewhere it can still stop."""
    v0 = min(v0, math.sqrt(2 * LIM.a_max * room))
    dv = LIM.a_max * LIM.dt
    v, x = v0, 0.0
    for _ in range(5000):
        w = safe_step_speed(v, room - x, LIM)
        nv = min(max(w, v - dv, 0.0), v + dv, 15.0)
        disp = 0.5 * (v + nv) * LIM.dt
        if disp > room - x:
            # below a_max*dt the last creep can overshoot by < a dt^2 / 8
            disp = room - x
            nv = max(0.0, min(nv, 2 * disp / LIM.dt - v))
            assert v < dv + 1e-12
        assert abs(nv - v) <= dv + 1e-9
        x += disp
        v = nv
        assert x <= room + 1e-9
        if v == 0.0 and room - x < 1e-6:
            break


def test_safe_step_speed_on_braking_curve_brakes_at_full_rate():
    room = 100.0
    v = math.sqrt(2 * LIM.a_max * room)
    w = safe_step_speed(v, room, LIM)
    assert w == pytest.approx(v - LIM.a_max * LIM.dt)


@given(st.floats(0.0, 15.0), st.floats(0.0, 15.0))
def test_step_never_tunnels(v, allowed):
    s = step_vehicle(_state(v), allowed, LIM)
    assert s.offset <= 15.0 * LIM.dt + 1e-9

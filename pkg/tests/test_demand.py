from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prtsim.demand import (
    ALIGHT,
    BOARD,
    DEPART,
    DemandConfig,
    DwellSampler,
    PassengerGroup,
    StationState,
    advance_station,
    dispatch_vehicle,
    generate_demand,
    sample_dwell,
)

STATIONS = [f"S{i:02d}" for i in range(12)]


def test_demand_config_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        DemandConfig(rate=0)


def test_zero_horizon_gives_no_groups():
    assert generate_demand(DemandConfig(480), 0.0, STATIONS) == []


def test_groups_are_well_formed_and_sorted():
    groups = generate_demand(DemandConfig(960, seed=3), 3600.0, STATIONS)
    assert groups
    times = [g.t_created for g in groups]
    assert times == sorted(times)
    assert all(0 <= t < 3600 for t in times)
    assert [g.gid for g in groups] == list(range(len(groups)))
    for g in groups:
        assert g.origin != g.dest
        assert 1 <= g.size <= 4
        assert g.origin in STATIONS and g.dest in STATIONS


def test_same_seed_same_stream():
    a = generate_demand(DemandConfig(480, seed=11), 3600.0, STATIONS)
    b = generate_demand(DemandConfig(480, seed=11), 3600.0, STATIONS)
    assert [(g.t_created, g.origin, g.dest, g.size) for g in a] == [(g.t_created, g.origin, g.dest, g.size) for g in b]


def test_poisson_count_concentration():
    """960/h over one hour lands within 3 sigma for nearly every seed."""
    lo, hi = 960 - 3 * math.sqrt(960), 960 + 3 * math.sqrt(960)
    counts = [len(generate_demand(DemandConfig(960, seed=s), 3600.0, STATIONS)) for s in range(300)]
    inside = sum(lo <= c <= hi for c in counts) / len(counts)
    assert inside >= 0.98
    assert abs(np.mean(counts) - 960) < 3 * math.sqrt(960 / len(counts)) * 2


def test_od_pairs_roughly_uniform():
    groups = generate_demand(DemandConfig(960, seed=5), 200 * 3600.0, STATIONS[:4])
    pairs = {}
    for g in groups:
        pairs[(g.origin, g.dest)] = pairs.get((g.origin, g.dest), 0) + 1
    assert len(pairs) == 12
    expected = len(groups) / 12
    for c in pairs.values():
        assert abs(c - expected) < 5 * math.sqrt(expected)


def test_sample_dwell_examples():
    s = DwellSampler()
    assert sample_dwell(s, 0.5) == pytest.approx(20.0)
    assert sample_dwell(s, 0.0) == pytest.approx(10.0)
    assert sample_dwell(s, 0.25) == pytest.approx(10 + math.sqrt(0.25 * 200))
    assert sample_dwell(s, 0.75) == pytest.approx(30 - math.sqrt(0.25 * 200))


@given(st.floats(0.0, 1.0, exclude_max=True))
def test_sample_dwell_in_range_and_monotone(u):
    s = DwellSampler()
    x = sample_dwell(s, u)
    assert 10.0 <= x <= 30.0
    if u + 0.01 < 1.0:
        assert sample_dwell(s, u + 0.01) >= x


def test_dwell_sampler_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DwellSampler(10, 40, 30)
    with pytest.raises(ValueError):
        DwellSampler(10, 10, 10)


def test_asymmetric_triangle_matches_analytic_mean():
    s = DwellSampler(0.0, 2.0, 10.0)
    u = np.random.default_rng(0).random(50_000)
    mean = np.mean([sample_dwell(s, x) for x in u])
    assert mean == pytest.approx(4.0, abs=0.05)


# ---------------------------------------------------------------- dispatch


def group(origin="A") -> PassengerGroup:
    return PassengerGroup(0, 1, origin, "B", 0.0)


def times(a, b):
    table = {("X", "A"): 100.0, ("Y", "A"): 60.0, ("A", "A"): 0.0, ("Z", "A"): 60.0}
    return table[(a, b)]


def test_dispatch_single_idle():
    assert dispatch_vehicle(group(), {7: "X"}, times) == 7


def test_dispatch_nearest():
    assert dispatch_vehicle(group(), {1: "X", 2: "Y"}, times) == 2


def test_dispatch_tie_smallest_id():
    assert dispatch_vehicle(group(), {9: "Y", 4: "Z"}, times) == 4


def test_dispatch_none_idle():
    assert dispatch_vehicle(group(), {}, times) is None


# ---------------------------------------------------------------- stations


def car(task=None, group=None):
    return SimpleNamespace(busy_until=0.0, task=task, group=group)


def test_single_arrival_rolls_to_head():
    st_ = StationState("A")
    v = car(task=DEPART)
    st_.enter(v, 0.0)
    assert st_.berths[-1] is v
    assert advance_station(st_, 0.0, lambda *_: None) == []
    assert st_.berths[0] is v
    assert v.busy_until == pytest.approx(st_.move_time(4))
    assert advance_station(st_, v.busy_until, lambda *_: None) == [v]


def test_move_time_is_rest_to_rest():
    st_ = StationState("A", pitch=10.0, a_max=2.0)
    # 10 m: accelerate 5 m and brake 5 m at 2 m/s^2
    assert st_.move_time(1) == pytest.approx(2 * math.sqrt(5 / 1.0))


def test_only_adjacent_moves_and_head_departs():
    st_ = StationState("A")
    blocker, behind = car(), car(task=DEPART)
    st_.berths[0] = blocker
    st_.berths[3] = behind
    assert advance_station(st_, 0.0, lambda *_: None) == []
    assert st_.berths[1] is behind
    assert st_.berths[0] is blocker


def test_alight_and_board_start_dwell():
    started = []
    g = group()
    st_ = StationState("A")
    st_.waiting.append(g)
    a, b = car(task=ALIGHT), car(task=BOARD, group=g)
    st_.berths[0], st_.berths[1] = a, b
    advance_station(st_, 0.0, lambda v, task: started.append((v, task)))
    assert started == [(a, ALIGHT), (b, BOARD)]


def test_board_waits_for_group():
    started = []
    st_ = StationState("A")
    st_.berths[0] = car(task=BOARD, group=group())
    advance_station(st_, 0.0, lambda v, task: started.append(task))
    assert started == []


def test_enter_full_tail_raises():
    st_ = StationState("A")
    st_.enter(car(), 0.0)
    with pytest.raises(RuntimeError):
        st_.enter(car(), 0.0)


def test_group_status_progression():
    g = group()
    assert g.status == "queued" and g.wait is None
    g.vehicle = 3
    assert g.status == "waiting"
    g.t_board_start = 12.0
    assert g.status == "boarding" and g.wait == 12.0
    g.t_depart = 30.0
    assert g.status == "riding"
    g.t_arrive = 90.0
    assert g.status == "completed"

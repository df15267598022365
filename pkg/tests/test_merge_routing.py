from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from prtsim.kinematics import MotionLimits
from prtsim.merge import A, B, JoinController, PriorityPolicy, detect_conflict, resolve, ungranted_speed_cap
from prtsim.network import Network, Node, NodeKind, Route, Segment, SegmentClass, nominal_route_time, route_cost
from prtsim.routing import (
    OccupancyView,
    RoutingConfig,
    RoutingMode,
    STATIC,
    edge_cost,
    replan_at_fork,
)

HWY, ROAD = SegmentClass.HIGHWAY, SegmentClass.ROAD
LIM = MotionLimits()


def ctrl(a=HWY, b=ROAD) -> JoinController:
    return JoinController("j", ("sa", "sb"), (a, b), "out")


def test_detect_conflict_examples():
    assert detect_conflict(5.0, 5.0, 1.0)
    assert not detect_conflict(5.0, 6.5, 1.0)
    assert detect_conflict(5.0, 5.9, 1.0)


def test_resolve_class_policies():
    assert resolve(ctrl(), PriorityPolicy.HIGHWAY_FIRST) == A
    assert resolve(ctrl(), PriorityPolicy.ROAD_FIRST) == B
    assert resolve(ctrl(ROAD, HWY), PriorityPolicy.HIGHWAY_FIRST) == B


def test_resolve_slider_alternates():
    c = ctrl()
    assert resolve(c, PriorityPolicy.SLIDER) == A
    assert c.slider_bit == B
    assert resolve(c, PriorityPolicy.SLIDER) == B
    assert c.contested == [1, 1]


def test_same_class_falls_back_to_slider():
    c = ctrl(ROAD, ROAD)
    assert resolve(c, PriorityPolicy.HIGHWAY_FIRST) == A
    assert resolve(c, PriorityPolicy.HIGHWAY_FIRST) == B
    assert c.slider_bit == A


def test_class_policy_leaves_slider_bit_alone_at_mixed_joins():
    c = ctrl()
    for _ in range(3):
        resolve(c, PriorityPolicy.ROAD_FIRST)
    assert c.slider_bit == A
    assert c.contested == [0, 3]


@given(st.sampled_from(list(PriorityPolicy)), st.integers(1, 60))
def test_slider_fairness_over_any_window(policy, k):
    c = ctrl(ROAD, ROAD)
    grants = [resolve(c, policy) for _ in range(2 * k)]
    assert grants.count(A) == grants.count(B) == k


def test_resolve_is_deterministic():
    c1, c2 = ctrl(), ctrl()
    for p in [PriorityPolicy.SLIDER, PriorityPolicy.HIGHWAY_FIRST, PriorityPolicy.SLIDER]:
        assert resolve(c1, p) == resolve(c2, p)


def test_ungranted_cap_examples():
    assert ungranted_speed_cap(10.0, LIM) == 0.0
    assert ungranted_speed_cap(110.0, LIM) == pytest.approx(20.0)


# ---------------------------------------------------------------- routing


def seg(sid, src, dst, length, cls=ROAD):
    return Segment(sid, src, dst, float(length), cls, cls.default_vmax)


def diamond() -> Network:
    """o -> f fork; short branch via x, long branch via y; both join at j -> d."""
    segs = [
        seg("a0", "o", "f", 100),
        seg("a1", "f", "x", 200),
        seg("a2", "x", "j", 200),
        seg("b1", "f", "y", 300),
        seg("b2", "y", "j", 300),
        seg("c0", "j", "d", 100),
    ]
    kinds = {"o": NodeKind.STATION, "d": NodeKind.STATION, "f": NodeKind.FORK, "j": NodeKind.JOIN}
    nodes = {n: Node(n, kinds.get(n, NodeKind.PLAIN)) for n in "ofxyjd"}
    return Network(nodes, {s.id: s for s in segs})


def test_edge_cost_examples():
    road = seg("r", "a", "b", 500)
    occ = OccupancyView({"r": 25}, {"r": 50})
    assert edge_cost(road, occ, STATIC) == pytest.approx(50.0)
    dyn = RoutingConfig(RoutingMode.DYNAMIC, alpha=0.0, beta=1.0, gamma=2.0)
    assert edge_cost(road, occ, dyn) == pytest.approx(100.0)
    no_occ = RoutingConfig(RoutingMode.DYNAMIC, alpha=0.01, beta=2.0, gamma=0.0)
    assert edge_cost(road, occ, no_occ) == pytest.approx(0.01 * 500 + 2 * 50)


def test_routing_config_validation():
    with pytest.raises(ValueError):
        RoutingConfig(alpha=-1)
    with pytest.raises(ValueError):
        RoutingConfig(alpha=0, beta=0, gamma=0)


@given(st.integers(0, 50), st.integers(0, 50), st.floats(0.0, 5.0))
def test_edge_cost_monotone_in_occupancy(c1, c2, gamma):
    road = seg("r", "a", "b", 500)
    cfg = RoutingConfig(RoutingMode.DYNAMIC, gamma=gamma)
    lo, hi = sorted((c1, c2))
    cost = lambda c: edge_cost(road, OccupancyView({"r": c}, {"r": 50}), cfg)  # noqa: E731
    assert cost(lo) <= cost(hi)


STATIC_ROUTE = Route(("a0", "a1", "a2", "c0"), "o", "d")


def test_replan_static_is_identity():
    net = diamond()
    occ = OccupancyView({"a1": 20}, {s: 50 for s in net.segments})
    assert replan_at_fork(STATIC_ROUTE, 0, net, occ, STATIC) is STATIC_ROUTE


def test_replan_empty_network_keeps_static_route():
    net = diamond()
    dyn = RoutingConfig(RoutingMode.DYNAMIC)
    assert replan_at_fork(STATIC_ROUTE, 0, net, OccupancyView.empty(net), dyn) == STATIC_ROUTE


def test_replan_avoids_full_short_branch():
    net = diamond()
    occ = OccupancyView({"a1": 20, "a2": 20}, {"a1": 20, "a2": 20, "b1": 30, "b2": 30, "a0": 10, "c0": 10})
    dyn = RoutingConfig(RoutingMode.DYNAMIC, gamma=5.0)
    # short: 2 * 20 s * (1 + 5) = 240 s, long: 2 * 30 s = 60 s
    r = replan_at_fork(STATIC_ROUTE, 0, net, occ, dyn)
    assert r.segments == ("a0", "b1", "b2", "c0")
    assert len(set(r.segments)) == len(r.segments)


def test_replan_cost_matches_nominal_when_occupancy_ignored():
    net = diamond()
    occ = OccupancyView({"a1": 20}, {s: 50 for s in net.segments})
    dyn = RoutingConfig(RoutingMode.DYNAMIC, alpha=0.0, beta=1.0, gamma=0.0)
    r = replan_at_fork(STATIC_ROUTE, 0, net, occ, dyn)
    assert route_cost(net, r, lambda s: edge_cost(s, occ, dyn)) == pytest.approx(nominal_route_time(net, r))


def test_replan_snapshot_is_deterministic():
    net = diamond()
    occ = OccupancyView({"a1": 7, "b2": 3}, {s: 20 for s in net.segments})
    dyn = RoutingConfig(RoutingMode.DYNAMIC, gamma=3.0)
    assert replan_at_fork(STATIC_ROUTE, 0, net, occ, dyn) == replan_at_fork(STATIC_ROUTE, 0, net, occ, dyn)

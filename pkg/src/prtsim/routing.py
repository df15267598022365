"""Static and occupancy-aware route planning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .network import Network, Route, Segment, shortest_route


class RoutingMode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class RoutingConfig:
    mode: RoutingMode = RoutingMode.STATIC
    alpha: float = 0.0  # s/m, weight on length
    beta: float = 1.0  # weight on nominal time
    gamma: float = 1.0  # weight on occupancy-scaled nominal time

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("routing weights must be non-negative")
        if self.alpha == self.beta == self.gamma == 0:
            raise ValueError("routing weights cannot all be zero")


STATIC = RoutingConfig()


@dataclass
class OccupancyView:
    """Vehicle counts per segment plus each segment's capacity ``floor(length / s0)``."""

    counts: Mapping[str, int]
    capacity: Mapping[str, int]

    @classmethod
    def empty(cls, net: Network, s0: float = 10.0) -> "OccupancyView":
        return cls({}, capacities(net, s0))


def capacities(net: Network, s0: float = 10.0) -> dict[str, int]:
    return {sid: max(1, math.floor(seg.length / s0)) for sid, seg in net.segments.items()}


def edge_cost(seg: Segment, occ: OccupancyView, cfg: RoutingConfig) -> float:
    t_nom = seg.length / seg.vmax
    if cfg.mode is RoutingMode.STATIC:
        return t_nom
    cost = cfg.alpha * seg.length + cfg.beta * t_nom
    if cfg.gamma:
        cost += cfg.gamma * (occ.counts.get(seg.id, 0) / occ.capacity[seg.id]) * t_nom
    return cost


def replan_at_fork(
    route: Route,
    fork_index: int,
    net: Network,
    occ: OccupancyView,
    cfg: RoutingConfig,
) -> Route:
    """Re-plan the part of ``route`` after the fork that ends segment ``fork_index``.

    The prefix up to and including that segment is kept; the remainder is the
    cheapest path from the fork to ``route.dest`` under the current occupancy.
    Static mode returns ``route`` unchanged.
    """
    if cfg.mode is RoutingMode.STATIC:
        return route
    fork = net.segments[route.segments[fork_index]].dst
    tail = shortest_route(net, fork, route.dest, lambda s: edge_cost(s, occ, cfg))
    return Route(route.segments[: fork_index + 1] + tail.segments, route.origin, route.dest)

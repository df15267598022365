"""Point-vehicle motion under speed limits, bounded acceleration and brick-wall separation."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


@dataclass(frozen=True)
class MotionLimits:
    a_max: float = 2.0  # m/s^2, symmetric accel/decel
    s0: float = 10.0  # m, minimum separation
    dt: float = 0.1  # s

    def check(self, v_max: float = 15.0) -> None:
        if self.a_max <= 0 or self.s0 <= 0 or self.dt <= 0:
            raise ValueError("a_max, s0 and dt must be positive")
        if v_max * self.dt >= self.s0:
            raise ValueError(f"dt={self.dt} too coarse: v_max*dt must stay below s0={self.s0}")


class Phase(str, Enum):
    IDLE = "idle"
    TO_PICKUP = "to_pickup"
    OCCUPIED = "occupied"
    TO_PARK = "to_park"
    DWELL = "dwell"


@dataclass
class VehicleState:
    """One vehicle as seen by the pure motion functions.

    ``route`` holds ``(segment_id, length, v_max)`` tuples and ``route_pos``
    indexes the segment the vehicle is on. The engine keeps its own, faster
    representation and only uses this type at the API boundary.
    """

    vid: int
    route: list[tuple[str, float, float]]
    route_pos: int = 0
    offset: float = 0.0
    speed: float = 0.0
    speed_factor: float = 1.0
    phase: Phase = Phase.IDLE

    @property
    def segment(self) -> str:
        return self.route[self.route_pos][0]

    @property
    def seg_length(self) -> float:
        return self.route[self.route_pos][1]

    @property
    def cap(self) -> float:
        return self.speed_factor * self.route[self.route_pos][2]


class RouteExhausted(RuntimeError):
    pass


def safe_follow_speed(gap: float, limits: MotionLimits) -> float:
    """Highest speed from which a stop short of ``gap - s0`` is still possible."""
    room = gap - limits.s0
    if room <= 0.0:
        return 0.0
    return math.sqrt(2.0 * limits.a_max * room)


def safe_step_speed(v: float, room: float, limits: MotionLimits) -> float:
    """Largest end-of-tick speed that keeps a full stop within ``room`` after the tick.

    Solves ``w**2 <= 2a (room - (v + w) dt / 2)`` for ``w``; unlike
    ``safe_follow_speed`` this accounts for the distance covered during the
    tick itself, so a vehicle on the braking curve stays on it.
    """
    a, dt = limits.a_max, limits.dt
    adt = a * dt
    disc = adt * adt + 4.0 * (2.0 * a * room - a * v * dt)
    if disc <= 0.0:
        return 0.0
    w = 0.5 * (math.sqrt(disc) - adt)
    return w if w > 0.0 else 0.0


def next_speed(v: float, allowed: float, cap: float, limits: MotionLimits) -> float:
    dv = limits.a_max * limits.dt
    v_new = min(max(allowed, v - dv), v + dv)
    return min(max(v_new, 0.0), cap)


def step_vehicle(state: VehicleState, allowed: float, limits: MotionLimits) -> VehicleState:
    """Advance one tick with a trapezoidal position update.

    Overshooting the end of a segment carries the remainder onto the next route
    segment; running past the last one raises :class:`RouteExhausted`.
    """
    if allowed < 0:
        raise ValueError("allowed speed must be non-negative")
    v_new = next_speed(state.speed, allowed, state.cap, limits)
    offset = state.offset + 0.5 * (state.speed + v_new) * limits.dt
    pos = state.route_pos
    while offset > state.route[pos][1]:
        offset -= state.route[pos][1]
        pos += 1
        if pos >= len(state.route):
            raise RouteExhausted(f"vehicle {state.vid} ran past the end of its route")
    return replace(state, speed=v_new, offset=offset, route_pos=pos)


def eta_to_point(speed: float, distance: float, v_cap: float, limits: MotionLimits) -> float:
    """Time to cover ``distance`` accelerating at ``a_max`` up to ``v_cap`` then cruising.

    A vehicle already above the cap is assumed to hold its speed.
    """
    if distance <= 0.0:
        return 0.0
    if v_cap <= 0.0 and speed <= 0.0:
        return math.inf
    a = limits.a_max
    if speed >= v_cap:
        return distance / speed
    ramp_t = (v_cap - speed) / a
    ramp_d = (speed + v_cap) * 0.5 * ramp_t
    if ramp_d >= distance:
        return (-speed + math.sqrt(speed * speed + 2.0 * a * distance)) / a
    return ramp_t + (distance - ramp_d) / v_cap

"""Fixed-step simulation loop with an event list for demand and dwell completions."""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TextIO

import numpy as np

from .benchmark import build_city_benchmark
from .demand import (
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
from .kinematics import MotionLimits, Phase, eta_to_point, safe_follow_speed
from .merge import A, B, JoinController, PriorityPolicy, detect_conflict, resolve
from .metrics import SimResult, TripRecord
from .network import Network, NodeKind, Route, SegmentClass, nominal_route_time, parse_network, shortest_route
from .routing import STATIC, OccupancyView, RoutingConfig, RoutingMode, capacities, edge_cost, replan_at_fork

log = logging.getLogger(__name__)

EPS = 1e-6

# event kinds in processing order for equal timestamps
EV_ARRIVAL = 0
EV_DWELL_END = 1


class SimulationError(RuntimeError):
    """An invariant broke during a run; ``dump`` holds the offending state."""

    def __init__(self, message: str, dump: dict | None = None):
        super().__init__(message)
        self.dump = dump or {}


@dataclass
class SimConfig:
    network: Network | None = None  # None: bundled City benchmark
    n_vehicles: int = 240
    policy: PriorityPolicy = PriorityPolicy.SLIDER
    routing: RoutingConfig = STATIC
    demand: float = 480.0  # groups/h
    limits: MotionLimits = field(default_factory=MotionLimits)
    duration: float = 14400.0
    warmup: float = 1800.0
    sunday_fraction: float = 0.0
    sunday_factor: float = 0.5
    seed: int = 0
    dwell: DwellSampler = field(default_factory=DwellSampler)
    capacitor_capacity: int | None = None
    check_invariants: bool = False

    def validate(self) -> None:
        if self.n_vehicles < 1:
            raise ValueError("n_vehicles must be at least 1")
        if not 0 <= self.warmup < self.duration:
            raise ValueError("need 0 <= warmup < duration")
        if not 0 <= self.sunday_fraction <= 1:
            raise ValueError("sunday_fraction must lie in [0, 1]")
        if not 0 < self.sunday_factor <= 1:
            raise ValueError("sunday_factor must lie in (0, 1]")
        if self.demand < 0:
            raise ValueError("demand must be non-negative")


class RngStreams:
    """Independent generators per purpose, all derived from one master seed."""

    NAMES = ("demand", "dwell", "tiebreak")

    def __init__(self, seed: int):
        children = np.random.SeedSequence(seed).spawn(len(self.NAMES))
        for name, child in zip(self.NAMES, children):
            setattr(self, name, np.random.default_rng(child))


def vehicle_allowed_speed(
    v_cap: float,
    limits: MotionLimits,
    leader_gap: float | None = None,
    merge_distance: float | None = None,
    stop_distance: float | None = None,
) -> float:
    """Minimum of the segment cap and every obstacle-derived cap.

    ``leader_gap`` is the distance to the leader's position, ``merge_distance``
    the distance to a join this vehicle holds no grant for, ``stop_distance`` the
    distance to a node the vehicle must stop at.
    """
    allowed = v_cap
    if leader_gap is not None:
        allowed = min(allowed, safe_follow_speed(leader_gap, limits))
    if merge_distance is not None:
        allowed = min(allowed, safe_follow_speed(merge_distance, limits))
    if stop_distance is not None:
        allowed = min(allowed, safe_follow_speed(stop_distance + limits.s0, limits))
    return allowed


class Track:
    """Runtime view of a segment: geometry plus the vehicles on it, front first."""

    __slots__ = ("id", "length", "vmax", "cls", "src", "dst", "vehicles", "ctrl", "branch", "dst_kind", "cap")

    def __init__(self, seg):
        self.id = seg.id
        self.length = seg.length
        self.vmax = seg.vmax
        self.cls = seg.cls
        self.src = seg.src
        self.dst = seg.dst
        self.vehicles: list[Vehicle] = []
        self.ctrl: JoinController | None = None
        self.branch = 0
        self.dst_kind: NodeKind | None = None
        self.cap = 1


class Vehicle:
    __slots__ = (
        "vid",
        "speed_factor",
        "phase",
        "track",
        "route",
        "pos",
        "offset",
        "speed",
        "dest",
        "place",
        "task",
        "busy_until",
        "group",
        "reserved",
        "came_from",
    )

    def __init__(self, vid: int, speed_factor: float = 1.0):
        self.vid = vid
        self.speed_factor = speed_factor
        self.phase = Phase.IDLE
        self.track: Track | None = None
        self.route: list[Track] = []
        self.pos = 0
        self.offset = 0.0
        self.speed = 0.0
        self.dest: str | None = None
        self.place = None  # StationState or Capacitor while parked
        self.task: str | None = None
        self.busy_until = 0.0
        self.group: PassengerGroup | None = None
        self.reserved = False
        self.came_from = -1  # branch index at the last join crossed


class Capacitor:
    __slots__ = ("node", "capacity", "parked", "reserved", "departing")

    def __init__(self, node: str, capacity: int):
        self.node = node
        self.capacity = capacity
        self.parked: list[Vehicle] = []
        self.reserved = 0
        self.departing: deque[Vehicle] = deque()

    def has_room(self) -> bool:
        return len(self.parked) + self.reserved < self.capacity


class _Counts:
    """Live per-segment vehicle counts for the routing cost function."""

    def __init__(self, tracks: dict[str, Track]):
        self._tracks = tracks

    def get(self, sid: str, default: int = 0) -> int:
        t = self._tracks.get(sid)
        return default if t is None else len(t.vehicles)


class Simulation:
    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        self.net = net = cfg.network if cfg.network is not None else build_city_benchmark()
        self.limits = lim = cfg.limits
        v_top = max(s.vmax for s in net.segments.values())
        lim.check(v_top)
        self.v_top = v_top
        self.rng = RngStreams(cfg.seed)
        self.clock = 0.0
        self.tick = 0

        self.tracks = {sid: Track(seg) for sid, seg in net.segments.items()}
        caps = capacities(net, lim.s0)
        for t in self.tracks.values():
            t.dst_kind = net.nodes[t.dst].kind
            t.cap = caps[t.id]
        self.out_track = {n: [self.tracks[s.id] for s in net.out_segs[n]] for n in net.nodes}
        self.in_track = {n: [self.tracks[s.id] for s in net.in_segs[n]] for n in net.nodes}
        self.occupancy = OccupancyView(_Counts(self.tracks), caps)

        self.stations = {
            n: StationState(n, net.stations[n], pitch=lim.s0, a_max=lim.a_max) for n in net.station_ids()
        }
        self.capacitors = {
            n: Capacitor(n, cfg.capacitor_capacity or net.capacitors[n]) for n in net.capacitor_ids()
        }
        self.terminals = sorted(self.stations) + sorted(self.capacitors)
        self._routes: dict[tuple[str, str], list[Track]] = {}
        self._nominal: dict[tuple[str, str], float] = {}
        for a in self.terminals:
            for b in self.terminals:
                if a != b:
                    r = shortest_route(net, a, b)
                    self._routes[(a, b)] = [self.tracks[s] for s in r.segments]
                    self._nominal[(a, b)] = nominal_route_time(net, r)

        # horizon large enough for the fastest segment to stop at the stop line
        self.horizon = v_top * v_top / (2 * lim.a_max) + 2 * lim.s0
        self.lookahead = lim.s0 + v_top * v_top / (2 * lim.a_max) + 2 * v_top * lim.dt
        self.joins: list[JoinController] = []
        self._approach: dict[tuple[str, int], list[tuple[Track, float, tuple[Track, ...]]]] = {}
        for nid, node in net.nodes.items():
            if node.kind is not NodeKind.JOIN:
                continue
            ins = self.in_track[nid]
            ctrl = JoinController(nid, (ins[0].id, ins[1].id), (ins[0].cls, ins[1].cls), self.out_track[nid][0].id)
            self.joins.append(ctrl)
            for b, t in enumerate(ins):
                t.ctrl = ctrl
                t.branch = b
                self._approach[(nid, b)] = self._upstream(t)
        self._ctrl_out = {c.join: self.tracks[c.out_segment] for c in self.joins}
        self._holder_oidx: dict[str, int] = {}

        self.vehicles: list[Vehicle] = []
        self.idle: dict[int, str] = {}
        self.queue: deque[PassengerGroup] = deque()
        self.events: list = []
        self.groups: list[PassengerGroup] = []
        self._pending_replans: list[Vehicle] = []
        self._refused: set[str] = set()  # stations that turned an arrival away this tick
        self._place_fleet()
        self.trace: TextIO | None = None

    # ------------------------------------------------------------------ setup

    def _upstream(self, branch: Track) -> list[tuple[Track, float, tuple[Track, ...]]]:
        """Tracks from which a vehicle can reach ``branch`` within the horizon.

        Each entry is ``(track, distance from its end to the join, tracks still
        to traverse after it up to and including the branch)``.
        """
        out = [(branch, 0.0, ())]
        frontier = [(branch, 0.0, ())]
        while frontier:
            t, d, path = frontier.pop()
            if self.net.nodes[t.src].kind in (NodeKind.STATION, NodeKind.CAPACITOR):
                continue
            for u in self.in_track[t.src]:
                du = d + t.length
                if du < self.horizon:
                    entry = (u, du, (t,) + path)
                    out.append(entry)
                    frontier.append(entry)
        out.sort(key=lambda e: e[1])
        return out

    def _place_fleet(self) -> None:
        n = self.cfg.n_vehicles
        factors = np.ones(n)
        k = int(round(self.cfg.sunday_fraction * n))
        if k:
            factors[self.rng.tiebreak.choice(n, size=k, replace=False)] = self.cfg.sunday_factor
        st_ids = sorted(self.stations)
        cap_ids = sorted(self.capacitors)
        slots = []
        for level in range(max(s.n_berths for s in self.stations.values())):
            for sid in st_ids:
                if level < self.stations[sid].n_berths:
                    slots.append((sid, level))
        for vid in range(n):
            v = Vehicle(vid, float(factors[vid]))
            self.vehicles.append(v)
            if vid < len(slots):
                sid, level = slots[vid]
                st = self.stations[sid]
                st.berths[level] = v
                v.place = st
                self.idle[vid] = sid
            elif cap_ids:
                cap = self.capacitors[cap_ids[(vid - len(slots)) % len(cap_ids)]]
                cap.parked.append(v)
                v.place = cap
                self.idle[vid] = cap.node
            else:
                raise ValueError("more vehicles than station berths and no capacitor to hold the rest")

    # ---------------------------------------------------------------- helpers

    def nominal_time(self, a: str, b: str) -> float:
        return 0.0 if a == b else self._nominal[(a, b)]

    def _route(self, a: str, b: str) -> list[Track]:
        return list(self._routes[(a, b)])

    def _schedule(self, t: float, kind: int, key: int, payload) -> None:
        heapq.heappush(self.events, (t, kind, key, payload))

    def _dwell(self) -> float:
        return sample_dwell(self.cfg.dwell, self.rng.dwell.random())

    # ------------------------------------------------------------- passengers

    def _on_group(self, g: PassengerGroup) -> None:
        self.stations[g.origin].waiting.append(g)
        if self.queue or not self.idle:
            self.queue.append(g)
            return
        self._assign(g, dispatch_vehicle(g, self.idle, self.nominal_time))

    def _head_idle(self, st: StationState) -> Vehicle | None:
        for v in st.berths:
            if v is not None and v.phase is Phase.IDLE and v.task is None and v.vid in self.idle:
                return v
        return None

    def _assign(self, g: PassengerGroup, vid: int) -> None:
        v = self.vehicles[vid]
        if isinstance(v.place, StationState):
            # idle vehicles in one station are interchangeable; use the one nearest the exit
            v = self._head_idle(v.place)
            vid = v.vid
        del self.idle[vid]
        g.vehicle = vid
        v.group = g
        v.phase = Phase.TO_PICKUP
        place = v.place
        if isinstance(place, StationState) and place.node == g.origin:
            v.task = BOARD
            return
        self._send(v, g.origin)

    def _send(self, v: Vehicle, dest: str) -> None:
        """Give a parked vehicle a route to ``dest`` and queue it for departure."""
        place = v.place
        v.route = self._route(place.node, dest)
        v.dest = dest
        v.task = DEPART
        if isinstance(place, Capacitor):
            place.parked.remove(v)
            place.departing.append(v)

    def _vehicle_free(self, v: Vehicle) -> None:
        """``v`` has no task any more; serve the oldest queued group or go idle."""
        v.task = None
        v.group = None
        v.phase = Phase.IDLE
        self.idle[v.vid] = v.place.node
        if self.queue:
            g = self.queue.popleft()
            self._assign(g, dispatch_vehicle(g, self.idle, self.nominal_time))
        place = v.place
        if isinstance(place, StationState) and place.occupied >= place.n_berths:
            # no free berth left, so one idle vehicle has to go
            out = self._head_idle(place)
            if out is not None:
                del self.idle[out.vid]
                self._send_to_park(out)

    def _start_dwell(self, v: Vehicle, task: str) -> None:
        dwell = self._dwell()
        v.busy_until = self.clock + dwell
        v.task = None
        if task == BOARD:
            v.group.t_board_start = self.clock
        else:
            v.group.t_arrive = self.clock
        v.phase = Phase.DWELL
        self._schedule(self.clock + dwell, EV_DWELL_END, v.vid, (v, task))

    def _on_dwell_end(self, t: float, v: Vehicle, task: str) -> None:
        g = v.group
        if task == ALIGHT:
            self._vehicle_free(v)
        else:
            g.t_depart = t
            v.place.waiting.remove(g)
            v.phase = Phase.OCCUPIED
            self._send(v, g.dest)

    def _park_target(self, here: str, exclude: str | None = None) -> tuple[str, bool]:
        """Nearest capacitor with room (reserved), else nearest other capacitor (cruising)."""
        best = None
        for cid, cap in self.capacitors.items():
            if cid == exclude:
                continue
            key = (not cap.has_room(), self.nominal_time(here, cid), cid)
            if best is None or key < best:
                best = key
        if best is None:
            raise SimulationError("no capacitor to park at")
        return best[2], not best[0]

    def _send_to_park(self, v: Vehicle) -> None:
        target, room = self._park_target(v.place.node)
        if room:
            self.capacitors[target].reserved += 1
        v.reserved = room
        v.phase = Phase.TO_PARK
        self._send(v, target)

    # ------------------------------------------------------------ merge logic

    def _lead(self, ctrl: JoinController, b: int) -> tuple[Vehicle, float] | None:
        best = None
        best_d = self.horizon
        for track, d_end, path in self._approach[(ctrl.join, b)]:
            if d_end >= best_d:
                break
            vs = track.vehicles
            if not vs:
                continue
            n = len(path)
            for v in vs:
                d = d_end + track.length - v.offset
                if d >= best_d:
                    break
                if n:
                    r = v.route
                    p = v.pos + 1
                    if len(r) < p + n or any(r[p + i] is not path[i] for i in range(n)):
                        continue
                best, best_d = v, d
                break
        return None if best is None else (best, best_d)

    def _holder_cleared(self, ctrl: JoinController) -> bool:
        h = ctrl.holder
        out = self._ctrl_out[ctrl.join]
        oidx = self._holder_oidx[ctrl.join]
        if h.track is None or oidx >= len(h.route) or h.route[oidx] is not out:
            return True
        if h.pos > oidx:
            return True
        return h.pos == oidx and h.offset >= self.limits.s0

    def _committed(self, v: Vehicle, d: float) -> bool:
        """True once ``v`` can no longer stop at the stop line ``s0`` before the join."""
        return v.speed * v.speed / (2 * self.limits.a_max) > d - self.limits.s0 + EPS

    def _holder_distance(self, ctrl: JoinController) -> float | None:
        h = ctrl.holder
        oidx = self._holder_oidx[ctrl.join]
        if h.pos >= oidx:
            return None
        d = h.track.length - h.offset
        r = h.route
        for i in range(h.pos + 1, oidx):
            d += r[i].length
        return d

    def _grant(self, ctrl: JoinController, v: Vehicle, branch: int) -> None:
        ctrl.holder = v
        ctrl.holder_branch = branch
        out = self._ctrl_out[ctrl.join]
        r = v.route
        oidx = v.pos
        while r[oidx] is not out:
            oidx += 1
        self._holder_oidx[ctrl.join] = oidx

    def _decide(self, ctrl: JoinController, la: tuple[Vehicle, float], lb: tuple[Vehicle, float]) -> int:
        """Branch that goes first when both leads are in the horizon."""
        (va, da), (vb, db) = la, lb
        ca = self._committed(va, da)
        cb = self._committed(vb, db)
        if ca != cb:
            grant = A if ca else B
            ctrl.uncontested[grant] += 1
            return grant
        lim = self.limits
        eta_a = eta_to_point(va.speed, da, va.speed_factor * self.tracks[ctrl.branches[A]].vmax, lim)
        eta_b = eta_to_point(vb.speed, db, vb.speed_factor * self.tracks[ctrl.branches[B]].vmax, lim)
        if not ca and detect_conflict(eta_a, eta_b, lim.s0 / self._ctrl_out[ctrl.join].vmax):
            return resolve(ctrl, self.cfg.policy)
        grant = A if eta_a <= eta_b else B
        ctrl.uncontested[grant] += 1
        return grant

    def _update_join(self, ctrl: JoinController) -> None:
        if ctrl.holder is not None and self._holder_cleared(ctrl):
            ctrl.holder = None
            ctrl.contest = None
        if ctrl.holder is not None:
            # a holder that can still stop may be challenged once by the other branch's lead
            other = 1 - ctrl.holder_branch
            lc = self._lead(ctrl, other)
            if lc is None:
                return
            h = ctrl.holder
            pair = (min(h.vid, lc[0].vid), max(h.vid, lc[0].vid))
            if pair == ctrl.contest:
                return
            dh = self._holder_distance(ctrl)
            if dh is None or self._committed(h, dh):
                return
            ctrl.contest = pair
            leads = [None, None]
            leads[ctrl.holder_branch] = (h, dh)
            leads[other] = lc
            grant = self._decide(ctrl, leads[A], leads[B])
            if grant == other:
                self._grant(ctrl, lc[0], other)
            return
        la = self._lead(ctrl, A)
        lb = self._lead(ctrl, B)
        if la is None and lb is None:
            return
        if lb is None:
            grant = A
            ctrl.uncontested[A] += 1
        elif la is None:
            grant = B
            ctrl.uncontested[B] += 1
        else:
            grant = self._decide(ctrl, la, lb)
            ctrl.contest = (min(la[0].vid, lb[0].vid), max(la[0].vid, lb[0].vid))
        self._grant(ctrl, (la if grant == A else lb)[0], grant)

    # --------------------------------------------------------------- movement

    def _speed_limit_cap(self, v: Vehicle, cap: float, dist: float) -> float:
        """Cap from slower segments ahead; ``dist`` is the distance to the current track end."""
        a2 = 2 * self.limits.a_max
        route = v.route
        p = v.pos + 1
        n = len(route)
        sf = v.speed_factor
        while p < n and dist * a2 < cap * cap:
            nv = sf * route[p].vmax
            if nv < cap:
                c = math.sqrt(nv * nv + a2 * dist)
                if c < cap:
                    cap = c
            dist += route[p].length
            p += 1
        return cap

    def _front_gap(self, v: Vehicle, dist: float) -> float:
        """Distance to the nearest obstacle ahead of a track's front vehicle.

        Obstacles are the rearmost vehicle on a later route segment, the end of
        the route (stop at the node) and the join of a branch that currently
        has to yield.
        """
        route = v.route
        p = v.pos
        last = len(route) - 1
        s0 = self.limits.s0
        look = self.lookahead
        t = route[p]
        while dist < look:
            if p == last:
                return dist + s0
            ctrl = t.ctrl
            if ctrl is not None:
                h = ctrl.holder
                if h is not None and h is not v and ctrl.holder_branch != t.branch:
                    return dist
            p += 1
            t = route[p]
            vs = t.vehicles
            if vs:
                return dist + vs[-1].offset
            dist += t.length
        return math.inf

    def _compute_allowed(self) -> list[tuple[Vehicle, float, float]]:
        s0 = self.limits.s0
        a = self.limits.a_max
        a2 = 2 * a
        dt = self.limits.dt
        adt = a * dt
        adt2 = adt * adt
        plan = []
        for t in self.tracks.values():
            vs = t.vehicles
            if not vs:
                continue
            ahead = None
            for v in vs:
                dist = t.length - v.offset
                cap = v.speed_factor * t.vmax
                if dist * a2 < cap * cap:
                    cap = self._speed_limit_cap(v, cap, dist)
                if ahead is None:
                    gap = self._front_gap(v, dist)
                else:
                    gap = ahead.offset - v.offset
                room = gap - s0
                allowed = cap
                if room <= 0:
                    allowed = 0.0
                elif a2 * room < cap * (cap + adt) + a * v.speed * dt:
                    # inlined safe_step_speed
                    disc = adt2 + 4.0 * (a2 * room - a * v.speed * dt)
                    w = 0.5 * (math.sqrt(disc) - adt) if disc > 0.0 else 0.0
                    if w < allowed:
                        allowed = w if w > 0.0 else 0.0
                plan.append((v, allowed, room))
                ahead = v
        return plan

    def _move(self, plan) -> list[Vehicle]:
        lim = self.limits
        dt = lim.dt
        dv = lim.a_max * dt
        arrived = []
        moved_tracks = []
        for v, allowed, room in plan:
            sp = v.speed
            nv = allowed
            if nv < sp - dv:
                nv = sp - dv
            elif nv > sp + dv:
                nv = sp + dv
            if nv < 0.0:
                nv = 0.0
            disp = 0.5 * (sp + nv) * dt
            if disp > room:
                disp = room if room > 0.0 else 0.0
                lim_v = 2.0 * disp / dt - sp
                if nv > lim_v:
                    nv = lim_v if lim_v > 0.0 else 0.0
            if self.cfg.check_invariants and abs(nv - sp) > dv + 1e-9:
                raise SimulationError(
                    f"vehicle {v.vid} changed speed by {nv - sp:.4f} m/s in one tick", self.dump()
                )
            v.speed = nv
            if disp <= 0.0:
                if v.pos == len(v.route) - 1 and v.track.length - v.offset < 1e-3:
                    arrived.append(v)
                continue
            v.offset += disp
            t = v.track
            if v.offset > t.length:
                moved_tracks.append(v)
            elif v.pos == len(v.route) - 1 and t.length - v.offset < 1e-3:
                arrived.append(v)
        for v in moved_tracks:
            self._advance_track(v, arrived)
        return arrived

    def _advance_track(self, v: Vehicle, arrived: list[Vehicle]) -> None:
        old = v.track
        while v.offset > v.track.length:
            if v.pos == len(v.route) - 1:
                v.offset = v.track.length
                arrived.append(v)
                break
            t = v.track
            if t.ctrl is not None:
                v.came_from = t.branch
            v.offset -= t.length
            v.pos += 1
            v.track = v.route[v.pos]
        if v.track is old:
            return
        old.vehicles.remove(v)
        new = v.track
        vs = new.vehicles
        if vs and vs[-1].offset < v.offset:
            i = len(vs)
            while i > 0 and vs[i - 1].offset < v.offset:
                i -= 1
            vs.insert(i, v)
        else:
            vs.append(v)
        self._on_enter(v, new)

    def _on_enter(self, v: Vehicle, t: Track) -> None:
        last = v.pos == len(v.route) - 1
        if last and v.phase is Phase.TO_PARK and t.dst_kind is NodeKind.CAPACITOR:
            cap = self.capacitors[t.dst]
            if not v.reserved:
                if cap.has_room():
                    cap.reserved += 1
                    v.reserved = True
                else:
                    nxt, room = self._park_target(t.dst, exclude=t.dst)
                    if room:
                        self.capacitors[nxt].reserved += 1
                    v.reserved = room
                    v.route = v.route + self._route(t.dst, nxt)
                    v.dest = nxt
        if (
            self.cfg.routing.mode is RoutingMode.DYNAMIC
            and t.dst_kind is NodeKind.FORK
            and not last
        ):
            self._pending_replans.append(v)

    def _replan(self, v: Vehicle) -> None:
        route = Route(tuple(t.id for t in v.route), v.route[0].src, v.route[-1].dst)
        new = replan_at_fork(route, v.pos, self.net, self.occupancy, self.cfg.routing)
        v.route = v.route[: v.pos + 1] + [self.tracks[s] for s in new.segments[v.pos + 1 :]]

    def _arrive(self, v: Vehicle) -> None:
        node = v.track.dst
        if v.track.dst_kind is NodeKind.STATION:
            st = self.stations[node]
            if not st.can_enter():
                st.overflow_ticks += 1
                self._refused.add(node)
                return
            self._detach(v)
            st.enter(v, self.clock)
            v.place = st
            if v.phase is Phase.OCCUPIED:
                v.task = ALIGHT
            elif v.phase is Phase.TO_PICKUP:
                v.task = BOARD
            else:
                raise SimulationError(f"vehicle {v.vid} reached station {node} in phase {v.phase}")
        elif v.track.dst_kind is NodeKind.CAPACITOR:
            cap = self.capacitors[node]
            if v.reserved:
                cap.reserved -= 1
                v.reserved = False
            elif not cap.has_room():
                nxt, room = self._park_target(node, exclude=node)
                if room:
                    self.capacitors[nxt].reserved += 1
                v.reserved = room
                v.route = v.route + self._route(node, nxt)
                v.dest = nxt
                return
            self._detach(v)
            cap.parked.append(v)
            v.place = cap
            self._vehicle_free(v)
        else:
            raise SimulationError(f"vehicle {v.vid} route ended at {node}")

    def _detach(self, v: Vehicle) -> None:
        v.track.vehicles.remove(v)
        v.track = None
        v.route = []
        v.pos = 0
        v.offset = 0.0
        v.speed = 0.0

    def _launch(self, v: Vehicle) -> bool:
        """Put a departing vehicle at the start of its route if the separation allows."""
        first = v.route[0]
        vs = first.vehicles
        if vs and vs[-1].offset < self.limits.s0:
            return False
        if isinstance(v.place, Capacitor):
            # vehicles passing through the capacitor must still be able to stop behind us
            for u in self.in_track[v.place.node][0].vehicles[:1]:
                if u.pos < len(u.route) - 1:
                    d = u.track.length - u.offset
                    if u.speed > safe_follow_speed(d, self.limits) + EPS:
                        return False
        v.track = first
        v.pos = 0
        v.offset = 0.0
        v.speed = 0.0
        v.task = None
        v.place = None
        vs.append(v)
        self._on_enter(v, first)
        return True

    # ---------------------------------------------------------------- stations

    def _stations_tick(self) -> None:
        for st in self.stations.values():
            for v in advance_station(st, self.clock, self._start_dwell):
                if self._launch(v):
                    st.remove_head(v)
            self._push_out(st)
        for cap in self.capacitors.values():
            if cap.departing and self._launch(cap.departing[0]):
                cap.departing.popleft()

    def _push_out(self, st: StationState) -> None:
        """Send idle vehicles to park when they block a departure or an arrival.

        Idle vehicles ahead of a vehicle that is boarding or about to leave
        must clear the head berth first. An arrival turned away at the
        entrance makes the head-most idle vehicle leave, unless some vehicle
        is already on its way out.
        """
        berths = st.berths
        blocking = 0
        leaving = False
        for k, v in enumerate(berths):
            if v is None:
                continue
            if v.task == DEPART:
                leaving = True
            if v.task == DEPART or v.task == BOARD or (v.phase is Phase.DWELL and v.group.t_arrive is None):
                blocking = k
        make_room = st.node in self._refused and not leaving
        for k, v in enumerate(berths):
            if v is None or v.phase is not Phase.IDLE or v.task is not None:
                continue
            if k >= blocking:
                if not make_room:
                    break
                make_room = False
            del self.idle[v.vid]
            self._send_to_park(v)

    # ------------------------------------------------------------- invariants

    def _check_separation(self) -> None:
        s0 = self.limits.s0
        for t in self.tracks.values():
            vs = t.vehicles
            for a, b in zip(vs, vs[1:]):
                if a.offset - b.offset < s0 - 1e-6:
                    raise SimulationError(
                        f"separation breach on {t.id}: vehicles {a.vid},{b.vid} {a.offset - b.offset:.3f} m apart",
                        self.dump(),
                    )
            if vs:
                v = vs[0]
                dist = t.length - v.offset
                p = v.pos
                while dist < s0 and p + 1 < len(v.route):
                    p += 1
                    nxt = v.route[p]
                    if nxt.vehicles:
                        gap = dist + nxt.vehicles[-1].offset
                        if gap < s0 - 1e-6:
                            raise SimulationError(
                                f"separation breach across {t.id}->{nxt.id}: {gap:.3f} m", self.dump()
                            )
                        break
                    dist += nxt.length
        for ctrl in self.joins:
            out = self._ctrl_out[ctrl.join]
            branches_in_zone = set()
            for b, sid in enumerate(ctrl.branches):
                for v in self.tracks[sid].vehicles[:1]:
                    if self.tracks[sid].length - v.offset < s0 - 1e-6:
                        branches_in_zone.add(b)
            for v in out.vehicles:
                if v.offset < s0 - 1e-6:
                    branches_in_zone.add(v.came_from)
            if len(branches_in_zone) > 1:
                raise SimulationError(f"two branches inside the merge zone of {ctrl.join}", self.dump())

    def dump(self) -> dict:
        return {
            "clock": self.clock,
            "vehicles": [
                {
                    "vid": v.vid,
                    "track": None if v.track is None else v.track.id,
                    "offset": v.offset,
                    "speed": v.speed,
                    "phase": v.phase.value,
                    "task": v.task,
                }
                for v in self.vehicles
            ],
            "holders": {c.join: None if c.holder is None else c.holder.vid for c in self.joins},
        }

    # -------------------------------------------------------------------- loop

    def step(self) -> None:
        """Advance the clock by one tick."""
        clock = self.clock
        events = self.events
        while events and events[0][0] <= clock + EPS:
            t, kind, _, payload = heapq.heappop(events)
            if kind == EV_ARRIVAL:
                self._on_group(payload)
            else:
                self._on_dwell_end(t, *payload)
        for ctrl in self.joins:
            self._update_join(ctrl)
        plan = self._compute_allowed()
        arrived = self._move(plan)
        if self._pending_replans:
            for v in self._pending_replans:
                if v.track is not None:
                    self._replan(v)
            self._pending_replans.clear()
        for v in arrived:
            if v.track is not None:
                self._arrive(v)
        self._stations_tick()
        self._refused.clear()
        if self.cfg.check_invariants:
            self._check_separation()
        if self.trace is not None:
            self._write_trace()
        self.tick += 1
        self.clock = self.tick * self.limits.dt

    def _write_trace(self) -> None:
        w = self.trace
        for v in self.vehicles:
            if v.track is not None:
                w.write(f"{self.clock:.1f},{v.vid},{v.track.id},{v.offset:.3f},{v.speed:.3f},{v.phase.value}\n")

    def run(self, trace: Path | str | None = None) -> SimResult:
        cfg = self.cfg
        if cfg.demand > 0:
            self.groups = generate_demand(
                DemandConfig(cfg.demand, cfg.seed), cfg.duration, sorted(self.stations), self.rng.demand
            )
        for g in self.groups:
            self._schedule(g.t_created, EV_ARRIVAL, g.gid, g)
        n_ticks = int(round(cfg.duration / self.limits.dt))
        fh = None
        if trace is not None:
            fh = open(trace, "w")
            fh.write("t,vehicle,segment,offset_m,speed_mps,phase\n")
            self.trace = fh
        try:
            while self.tick < n_ticks:
                self.step()
        finally:
            if fh is not None:
                fh.close()
                self.trace = None
        return self.result()

    # ------------------------------------------------------------------ output

    def status_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(("queued", "waiting", "boarding", "riding", "completed"), 0)
        for g in self.groups:
            if g.t_created <= self.clock + EPS:
                counts[g.status] += 1
        return counts

    def result(self) -> SimResult:
        cfg = self.cfg
        all_trips = []
        for g in self.groups:
            if g.t_arrive is None:
                continue
            all_trips.append(
                TripRecord(
                    g.gid,
                    g.size,
                    g.origin,
                    g.dest,
                    g.t_created,
                    g.t_board_start,
                    g.t_depart,
                    g.t_arrive,
                    self._nominal[(g.origin, g.dest)],
                )
            )
        trips = [t for t in all_trips if cfg.warmup <= t.t_arrive <= cfg.duration]
        late = [g for g in self.groups if g.t_created >= cfg.warmup]
        served = sum(g.t_arrive is not None for g in late)
        counts = self.status_counts()
        generated = sum(1 for g in self.groups if g.t_created <= self.clock + EPS)
        if sum(counts.values()) != generated:
            raise SimulationError("passenger conservation failed", {"counts": counts, "generated": generated})
        if len(self.vehicles) != cfg.n_vehicles:
            raise SimulationError("vehicle conservation failed")
        for t in all_trips:
            if t.delta_pct < -5.0:
                raise SimulationError(f"trip {t.group_id} beat its nominal time: {t.delta_pct:.2f}%")
        joins = {
            c.join: {"contested": list(c.contested), "uncontested": list(c.uncontested), "mixed": c.mixed}
            for c in self.joins
        }
        return SimResult(
            trips=trips,
            generated=len(late),
            served=served,
            unserved=len(late) - served,
            status_counts=counts,
            join_stats=joins,
            all_trips=all_trips,
            station_overflow_s={s: st.overflow_ticks * self.limits.dt for s, st in self.stations.items()},
        )


def run(cfg: SimConfig, trace: Path | str | None = None) -> SimResult:
    return Simulation(cfg).run(trace)


def load_config(text: str, base: SimConfig | None = None) -> SimConfig:
    """Read ``key = value`` lines (``#`` comments) on top of ``base``."""
    cfg = replace(base) if base is not None else SimConfig()
    routing = {}
    limits = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "network":
            cfg.network = None if val == "city" else parse_network(Path(val).read_text())
        elif key == "vehicles":
            cfg.n_vehicles = int(val)
        elif key == "policy":
            cfg.policy = PriorityPolicy(val)
        elif key == "routing":
            routing["mode"] = RoutingMode(val)
        elif key in ("alpha", "beta", "gamma"):
            routing[key] = float(val)
        elif key == "demand":
            cfg.demand = float(val)
        elif key in ("a_max", "s0", "dt"):
            limits[key] = float(val)
        elif key in ("duration", "warmup", "sunday_fraction", "sunday_factor"):
            setattr(cfg, key, float(val))
        elif key == "seed":
            cfg.seed = int(val)
        elif key == "capacitor_capacity":
            cfg.capacitor_capacity = int(val)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if routing:
        cfg.routing = replace(cfg.routing, **routing)
    if limits:
        cfg.limits = replace(cfg.limits, **limits)
    return cfg

"""Track graph: typed nodes, typed segments, validation, file format and routing."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

MIN_SEPARATION = 10.0
DEFAULT_BERTHS = 5
DEFAULT_CAPACITY = 20


class NetworkError(ValueError):
    """Raised for malformed network files or networks that break a structural rule."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoRouteError(NetworkError):
    pass


class NodeKind(str, Enum):
    STATION = "station"
    CAPACITOR = "capacitor"
    FORK = "fork"
    JOIN = "join"
    PLAIN = "plain"


# (in-degree, out-degree) each kind must have
DEGREES = {
    NodeKind.STATION: (1, 1),
    NodeKind.CAPACITOR: (1, 1),
    NodeKind.FORK: (1, 2),
    NodeKind.JOIN: (2, 1),
    NodeKind.PLAIN: (1, 1),
}


class SegmentClass(str, Enum):
    ROAD = "road"
    HIGHWAY = "highway"

    @property
    def default_vmax(self) -> float:
        return 15.0 if self is SegmentClass.HIGHWAY else 10.0


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Segment:
    id: str
    src: str
    dst: str
    length: float
    cls: SegmentClass
    vmax: float

    @property
    def nominal_time(self) -> float:
        return self.length / self.vmax


@dataclass(frozen=True)
class Route:
    segments: tuple[str, ...]
    origin: str
    dest: str

    def __len__(self) -> int:
        return len(self.segments)


@dataclass
class Network:
    """Directed track graph.

    Construction does not validate; call :meth:`validate` (``parse_network`` and
    ``build_city_benchmark`` always do).
    """

    nodes: dict[str, Node] = field(default_factory=dict)
    segments: dict[str, Segment] = field(default_factory=dict)
    stations: dict[str, int] = field(default_factory=dict)
    capacitors: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._index()

    def _index(self) -> None:
        self.out_segs: dict[str, list[Segment]] = {n: [] for n in self.nodes}
        self.in_segs: dict[str, list[Segment]] = {n: [] for n in self.nodes}
        for seg in self.segments.values():
            self.out_segs.setdefault(seg.src, []).append(seg)
            self.in_segs.setdefault(seg.dst, []).append(seg)
        for lst in self.out_segs.values():
            lst.sort(key=lambda s: s.id)
        for lst in self.in_segs.values():
            lst.sort(key=lambda s: s.id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.segments == other.segments
            and self.stations == other.stations
            and self.capacitors == other.capacitors
        )

    def station_ids(self) -> list[str]:
        return sorted(n for n, node in self.nodes.items() if node.kind is NodeKind.STATION)

    def capacitor_ids(self) -> list[str]:
        return sorted(n for n, node in self.nodes.items() if node.kind is NodeKind.CAPACITOR)

    def kind(self, node_id: str) -> NodeKind:
        return self.nodes[node_id].kind

    def total_length(self) -> float:
        return sum(s.length for s in self.segments.values())

    def validate(self, min_segment_length: float = MIN_SEPARATION) -> None:
        for seg in self.segments.values():
            for end in (seg.src, seg.dst):
                if end not in self.nodes:
                    raise NetworkError(f"segment {seg.id} references unknown node {end}")
            if seg.vmax <= 0:
                raise NetworkError(f"segment {seg.id} has non-positive vmax {seg.vmax}")
            if seg.length < min_segment_length:
                raise NetworkError(
                    f"segment {seg.id} is {seg.length} m, shorter than the {min_segment_length} m separation"
                )
        self._index()
        for nid, node in self.nodes.items():
            deg = (len(self.in_segs[nid]), len(self.out_segs[nid]))
            if deg == (2, 2):
                raise NetworkError(f"node {nid} is an x-type intersection (2 in, 2 out)")
            if deg != DEGREES[node.kind]:
                raise NetworkError(
                    f"node {nid} ({node.kind.value}) has in/out degree {deg}, expected {DEGREES[node.kind]}"
                )
            if node.kind in (NodeKind.STATION, NodeKind.CAPACITOR):
                for seg in self.in_segs[nid] + self.out_segs[nid]:
                    if seg.cls is SegmentClass.HIGHWAY:
                        raise NetworkError(f"highway segment {seg.id} touches {node.kind.value} {nid}")
        for nid in self.stations:
            if self.nodes.get(nid) is None or self.nodes[nid].kind is not NodeKind.STATION:
                raise NetworkError(f"station declaration for non-station node {nid}")
        for nid in self.capacitors:
            if self.nodes.get(nid) is None or self.nodes[nid].kind is not NodeKind.CAPACITOR:
                raise NetworkError(f"capacitor declaration for non-capacitor node {nid}")
        stations = self.station_ids()
        for nid in stations:
            self.stations.setdefault(nid, DEFAULT_BERTHS)
        for nid in self.capacitor_ids():
            self.capacitors.setdefault(nid, DEFAULT_CAPACITY)
        # vehicles travel between every pair of terminals (stations and capacitors)
        terminals = stations + self.capacitor_ids()
        for src in terminals:
            seen = self._reachable(src)
            missing = [s for s in terminals if s != src and s not in seen]
            if missing:
                raise NetworkError(f"{self.nodes[src].kind.value} {src} cannot reach {', '.join(missing)}")

    def _reachable(self, src: str) -> set[str]:
        seen = {src}
        stack = [src]
        while stack:
            u = stack.pop()
            if u != src and self.nodes[u].kind in (NodeKind.STATION, NodeKind.CAPACITOR):
                continue
            for seg in self.out_segs[u]:
                if seg.dst not in seen:
                    seen.add(seg.dst)
                    stack.append(seg.dst)
        return seen


def _float(tok: str, lineno: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise NetworkError(f"bad {what} {tok!r}", lineno) from None


def _keyword(tok: str, key: str, lineno: int) -> str:
    prefix = key + "="
    if not tok.startswith(prefix):
        raise NetworkError(f"expected {prefix}<value>, got {tok!r}", lineno)
    return tok[len(prefix):]


def parse_network(text: str, validate: bool = True) -> Network:
    """Parse the line-oriented network format.

    Declarations (``#`` starts a comment)::

        node <id> <station|capacitor|fork|join|plain> [<x> <y>]
        segment <id> <from> <to> <length_m> <road|highway> [vmax=<m/s>]
        station <node-id> berths=<int>
        capacitor <node-id> capacity=<int>
    """
    nodes: dict[str, Node] = {}
    segments: dict[str, Segment] = {}
    stations: dict[str, int] = {}
    capacitors: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        head, args = toks[0], toks[1:]
        if head == "node":
            if len(args) not in (2, 4):
                raise NetworkError("node takes <id> <kind> [<x> <y>]", lineno)
            nid = args[0]
            if nid in nodes:
                raise NetworkError(f"duplicate node id {nid}", lineno)
            try:
                kind = NodeKind(args[1])
            except ValueError:
                raise NetworkError(f"unknown node kind {args[1]!r}", lineno) from None
            x = y = None
            if len(args) == 4:
                x, y = _float(args[2], lineno, "x"), _float(args[3], lineno, "y")
            nodes[nid] = Node(nid, kind, x, y)
        elif head == "segment":
            if len(args) not in (5, 6):
                raise NetworkError("segment takes <id> <from> <to> <length_m> <road|highway> [vmax=<m/s>]", lineno)
            sid, src, dst = args[0], args[1], args[2]
            if sid in segments:
                raise NetworkError(f"duplicate segment id {sid}", lineno)
            length = _float(args[3], lineno, "length")
            if length <= 0:
                raise NetworkError(f"segment length must be positive, got {length}", lineno)
            try:
                cls = SegmentClass(args[4])
            except ValueError:
                raise NetworkError(f"unknown segment class {args[4]!r}", lineno) from None
            vmax = cls.default_vmax
            if len(args) == 6:
                vmax = _float(_keyword(args[5], "vmax", lineno), lineno, "vmax")
                if vmax <= 0:
                    raise NetworkError(f"vmax must be positive, got {vmax}", lineno)
            for end in (src, dst):
                if end not in nodes:
                    raise NetworkError(f"segment {sid} references undeclared node {end}", lineno)
            segments[sid] = Segment(sid, src, dst, length, cls, vmax)
        elif head in ("station", "capacitor"):
            key = "berths" if head == "station" else "capacity"
            if len(args) != 2:
                raise NetworkError(f"{head} takes <node-id> {key}=<int>", lineno)
            nid = args[0]
            try:
                count = int(_keyword(args[1], key, lineno))
            except ValueError:
                raise NetworkError(f"bad {key} value {args[1]!r}", lineno) from None
            if count < 1:
                raise NetworkError(f"{key} must be at least 1", lineno)
            table = stations if head == "station" else capacitors
            if nid in table:
                raise NetworkError(f"duplicate {head} declaration for {nid}", lineno)
            table[nid] = count
        else:
            raise NetworkError(f"unknown declaration {head!r}", lineno)
    net = Network(nodes, segments, stations, capacitors)
    if validate:
        net.validate()
    return net


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_network(net: Network) -> str:
    """Serialise ``net`` so that ``parse_network(emit_network(net)) == net``."""
    lines = []
    for node in net.nodes.values():
        line = f"node {node.id} {node.kind.value}"
        if node.x is not None and node.y is not None:
            line += f" {_fmt(node.x)} {_fmt(node.y)}"
        lines.append(line)
    for seg in net.segments.values():
        line = f"segment {seg.id} {seg.src} {seg.dst} {_fmt(seg.length)} {seg.cls.value}"
        if seg.vmax != seg.cls.default_vmax:
            line += f" vmax={_fmt(seg.vmax)}"
        lines.append(line)
    for nid, berths in net.stations.items():
        lines.append(f"station {nid} berths={berths}")
    for nid, cap in net.capacitors.items():
        lines.append(f"capacitor {nid} capacity={cap}")
    return "\n".join(lines) + "\n"


def check_route(net: Network, route: Route) -> None:
    if not route.segments:
        raise NetworkError("empty route")
    segs = []
    for sid in route.segments:
        if sid not in net.segments:
            raise NetworkError(f"route uses unknown segment {sid}")
        segs.append(net.segments[sid])
    if segs[0].src != route.origin:
        raise NetworkError(f"route starts at {segs[0].src}, not origin {route.origin}")
    if segs[-1].dst != route.dest:
        raise NetworkError(f"route ends at {segs[-1].dst}, not destination {route.dest}")
    for a, b in zip(segs, segs[1:]):
        if a.dst != b.src:
            raise NetworkError(f"segments {a.id} and {b.id} are not consecutive")


def nominal_route_time(net: Network, route: Route) -> float:
    """Travel time at the speed limit of every segment, ignoring acceleration."""
    check_route(net, route)
    return sum(net.segments[s].nominal_time for s in route.segments)


def route_cost(net: Network, route: Route, cost_fn: Callable[[Segment], float]) -> float:
    total = 0.0
    for sid in route.segments:
        total += cost_fn(net.segments[sid])
    return total


def _path_to(pred: dict[str, Segment | None], node: str) -> list[str]:
    path = []
    while pred[node] is not None:
        seg = pred[node]
        path.append(seg.id)
        node = seg.src
    path.reverse()
    return path


def shortest_route(
    net: Network,
    origin: str,
    dest: str,
    cost_fn: Callable[[Segment], float] | None = None,
) -> Route:
    """Dijkstra with a deterministic tie-break.

    Among equal-cost routes the one whose first differing segment id is smaller
    wins. Stations and capacitors are never passed through, only started from or
    ended at. Costs must be non-negative; with strictly positive costs the result
    is the lexicographically smallest minimum-cost path.
    """
    if origin == dest:
        raise ValueError("origin and destination coincide")
    if origin not in net.nodes or dest not in net.nodes:
        raise NoRouteError(f"unknown node {origin if origin not in net.nodes else dest}")
    if cost_fn is None:
        cost_fn = nominal_cost
    terminal = (NodeKind.STATION, NodeKind.CAPACITOR)
    dist: dict[str, float] = {origin: 0.0}
    pred: dict[str, Segment | None] = {origin: None}
    done: set[str] = set()
    heap = [(0.0, 0, origin)]
    counter = 1
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dest:
            break
        if u != origin and net.nodes[u].kind in terminal:
            continue
        for seg in net.out_segs[u]:
            v = seg.dst
            if v in done:
                continue
            c = cost_fn(seg)
            if c < 0:
                raise ValueError(f"negative cost {c} on segment {seg.id}")
            nd = d + c
            old = dist.get(v)
            if old is None or nd < old:
                dist[v] = nd
                pred[v] = seg
                heapq.heappush(heap, (nd, counter, v))
                counter += 1
            elif nd == old and _path_to(pred, u) + [seg.id] < _path_to(pred, v):
                pred[v] = seg
    if dest not in done:
        raise NoRouteError(f"no route from {origin} to {dest}")
    return Route(tuple(_path_to(pred, dest)), origin, dest)


def nominal_cost(seg: Segment) -> float:
    return seg.length / seg.vmax

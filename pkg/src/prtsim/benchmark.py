"""Synthesised "City" benchmark: a highway ring with four roundabouts, suburbs and a centre.

Layout (all one-way tracks; "two-way" highways are two opposite segments)::

    - four roundabouts at N, W, S, E, each a ring of 4 joins + 4 forks joined by
      50 m road segments, with ports to: its suburb, the next roundabout CCW,
      the city centre, the next roundabout CW;
    - highway links between neighbouring roundabouts in both directions;
    - a suburb loop behind every roundabout holding two stations and one capacitor;
    - radial roads from every roundabout to a one-way city ring with four stations.

Stations and capacitors sit on off-line sidings (fork -> siding -> node -> siding
-> join) next to a short bypass of the main line.
"""

from __future__ import annotations

import math

from .network import DEFAULT_BERTHS, DEFAULT_CAPACITY, Network, Node, NodeKind, Segment, SegmentClass

ROUNDABOUT_SEGMENT = 50.0
HIGHWAY_LINK = 1675.0
RING_RADIUS = 1100.0
SIDING = 100.0
BYPASS = 150.0
SUBURB_FEEDER = 400.0
SUBURB_MIDDLE = 300.0
RADIAL = 600.0
CITY_RING_SPACING = (50.0, 150.0, 300.0)

COMPASS = ("N", "W", "S", "E")
_ANGLE = {"N": 90.0, "W": 180.0, "S": 270.0, "E": 0.0}


class _Builder:
    def __init__(self) -> None:
        self.nodes: dict[str, Node] = {}
        self.segments: dict[str, Segment] = {}
        self.stations: dict[str, int] = {}
        self.capacitors: dict[str, int] = {}

    def node(self, nid: str, kind: NodeKind, x: float, y: float) -> str:
        assert nid not in self.nodes, nid
        self.nodes[nid] = Node(nid, kind, round(x, 1), round(y, 1))
        return nid

    def seg(self, src: str, dst: str, length: float, cls: SegmentClass = SegmentClass.ROAD) -> str:
        sid = f"s{len(self.segments) + 1:03d}"
        self.segments[sid] = Segment(sid, src, dst, float(length), cls, cls.default_vmax)
        return sid

    def siding(
        self, prefix: str, kind: NodeKind, start: str, feed: float, x: float, y: float, dx: float, dy: float
    ) -> str:
        """Attach ``start`` -feed-> fork -> {bypass, siding -> terminal -> siding} -> join.

        Returns the join id.
        """
        fork = self.node(f"{prefix}_f", NodeKind.FORK, x, y)
        self.seg(start, fork, feed)
        term = self.node(prefix, kind, x + dx * 0.5 - dy * 0.1, y + dy * 0.5 + dx * 0.1)
        join = self.node(f"{prefix}_j", NodeKind.JOIN, x + dx, y + dy)
        self.seg(fork, join, BYPASS)
        self.seg(fork, term, SIDING)
        self.seg(term, join, SIDING)
        if kind is NodeKind.STATION:
            self.stations[prefix] = DEFAULT_BERTHS
        else:
            self.capacitors[prefix] = DEFAULT_CAPACITY
        return join


def _polar(r: float, deg: float) -> tuple[float, float]:
    return r * math.cos(math.radians(deg)), r * math.sin(math.radians(deg))


def build_city_benchmark() -> Network:
    """Return the bundled benchmark: 12 stations, 4 capacitors, about 33 km of track."""
    b = _Builder()
    # roundabout ports in ring order: suburb, ccw highway, city, cw highway
    ports = ("sub", "ccw", "city", "cw")
    ring_in: dict[tuple[str, str], str] = {}
    ring_out: dict[tuple[str, str], str] = {}
    for c in COMPASS:
        cx, cy = _polar(RING_RADIUS, _ANGLE[c])
        ring = []
        for k, port in enumerate(ports):
            base = _ANGLE[c] + 90.0 * k
            jx, jy = _polar(40.0, base - 20.0)
            fx, fy = _polar(40.0, base + 20.0)
            # entry from `port` then exit to the following port
            ring.append(b.node(f"R{c}_j{port}", NodeKind.JOIN, cx + jx, cy + jy))
            nxt = ports[(k + 1) % 4]
            ring.append(b.node(f"R{c}_f{nxt}", NodeKind.FORK, cx + fx, cy + fy))
            ring_in[(c, port)] = ring[-2]
            ring_out[(c, nxt)] = ring[-1]
        for a, z in zip(ring, ring[1:] + ring[:1]):
            b.seg(a, z, ROUNDABOUT_SEGMENT)

    # highway links between neighbouring roundabouts, both directions
    for i, c in enumerate(COMPASS):
        nxt = COMPASS[(i + 1) % 4]
        b.seg(ring_out[(c, "ccw")], ring_in[(nxt, "cw")], HIGHWAY_LINK, SegmentClass.HIGHWAY)
        b.seg(ring_out[(nxt, "cw")], ring_in[(c, "ccw")], HIGHWAY_LINK, SegmentClass.HIGHWAY)

    # suburb loops: two stations and a capacitor each
    names = iter("ABCDEFGH")
    for c in COMPASS:
        ang = _ANGLE[c]
        ex, ey = _polar(RING_RADIUS + 300.0, ang + 8.0)
        p1x, p1y = _polar(RING_RADIUS + 700.0, ang - 10.0)
        p2x, p2y = _polar(RING_RADIUS + 900.0, ang)
        p3x, p3y = _polar(RING_RADIUS + 700.0, ang + 10.0)
        start = ring_out[(c, "sub")]
        last = b.siding(
            next(names), NodeKind.STATION, start, SUBURB_FEEDER, p1x, p1y, (p2x - p1x) * 0.3, (p2y - p1y) * 0.3
        )
        last = b.siding(f"CAP{c}", NodeKind.CAPACITOR, last, SUBURB_MIDDLE, p2x - 50, p2y - 50, 100, 100)
        last = b.siding(
            next(names), NodeKind.STATION, last, SUBURB_MIDDLE, p3x, p3y, (ex - p3x) * 0.3, (ey - p3y) * 0.3
        )
        b.seg(last, ring_in[(c, "sub")], SUBURB_FEEDER)

    # city ring: for every direction an exit fork, an entry join and a station
    entry_gap, station_gap, exit_gap = CITY_RING_SPACING
    city_nodes = []
    for c in COMPASS:
        ang = _ANGLE[c]
        fx, fy = _polar(350.0, ang - 10.0)
        jx, jy = _polar(350.0, ang + 5.0)
        sx, sy = _polar(350.0, ang + 30.0)
        fork = b.node(f"X{c}_exit", NodeKind.FORK, fx, fy)
        join = b.node(f"X{c}_entry", NodeKind.JOIN, jx, jy)
        city_nodes.append((c, fork, join, (sx, sy)))
    tails = []
    for c, fork, join, (sx, sy) in city_nodes:
        b.seg(fork, join, entry_gap)
        tails.append(b.siding(f"C{c}", NodeKind.STATION, join, station_gap, sx, sy, -sy * 0.15, sx * 0.15))
    for i, tail in enumerate(tails):
        b.seg(tail, city_nodes[(i + 1) % 4][1], exit_gap)

    # radial roads
    for c, fork, join, _ in city_nodes:
        b.seg(ring_out[(c, "city")], join, RADIAL)
        b.seg(fork, ring_in[(c, "city")], RADIAL)

    net = Network(b.nodes, b.segments, b.stations, b.capacitors)
    net.validate()
    return net

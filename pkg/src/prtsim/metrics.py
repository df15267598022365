"""Trip records, Average Squared Delay, waiting time and saturation finding."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

TRIP_COLUMNS = (
    "group_id",
    "size",
    "origin",
    "dest",
    "t_created",
    "t_board_start",
    "t_depart",
    "t_arrive",
    "nominal_s",
    "actual_s",
    "delta_pct",
    "wait_s",
)


class NoData(ValueError):
    """A metric was asked for over an empty population."""


@dataclass(frozen=True)
class TripRecord:
    group_id: int
    size: int
    origin: str
    dest: str
    t_created: float
    t_board_start: float
    t_depart: float
    t_arrive: float
    nominal: float

    @property
    def actual(self) -> float:
        return self.t_arrive - self.t_depart

    @property
    def delta_pct(self) -> float:
        return 100.0 * (self.actual - self.nominal) / self.nominal

    @property
    def wait(self) -> float:
        return self.t_board_start - self.t_created

    def row(self) -> list[str]:
        return [
            str(self.group_id),
            str(self.size),
            self.origin,
            self.dest,
            f"{self.t_created:.3f}",
            f"{self.t_board_start:.3f}",
            f"{self.t_depart:.3f}",
            f"{self.t_arrive:.3f}",
            f"{self.nominal:.3f}",
            f"{self.actual:.3f}",
            f"{self.delta_pct:.4f}",
            f"{self.wait:.3f}",
        ]


def asd(deltas: Iterable[float]) -> float:
    """Root mean square of per-trip relative delays, in percent."""
    vals = list(deltas)
    if not vals:
        raise NoData("no full trips")
    return math.sqrt(math.fsum(d * d for d in vals) / len(vals))


def trips_asd(trips: Sequence[TripRecord]) -> float:
    return asd(t.delta_pct for t in trips)


def avg_wait(trips: Sequence[TripRecord]) -> float:
    if not trips:
        raise NoData("no served groups")
    return math.fsum(t.wait for t in trips) / len(trips)


def find_saturation(points: Sequence[tuple[float, float]], threshold: float) -> float | None:
    """Vehicle count at which ASD first reaches ``threshold``.

    Linear interpolation between the two grid points that bracket the first
    crossing. ``None`` means the threshold is never reached.
    """
    if len(points) < 2:
        raise ValueError("need at least two (n_vehicles, asd) points")
    ns = [p[0] for p in points]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("vehicle counts must be strictly increasing")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    for i, (n, a) in enumerate(points):
        if a >= threshold:
            if i == 0:
                return float(n)
            n0, a0 = points[i - 1]
            return n0 + (n - n0) * (threshold - a0) / (a - a0)
    return None


@dataclass
class SimResult:
    trips: list[TripRecord]
    generated: int
    served: int
    unserved: int
    status_counts: dict[str, int]
    join_stats: dict[str, dict[str, list[int]]] = field(default_factory=dict)
    all_trips: list[TripRecord] = field(default_factory=list)
    station_overflow_s: dict[str, float] = field(default_factory=dict)

    @property
    def asd_pct(self) -> float | None:
        return trips_asd(self.trips) if self.trips else None

    @property
    def avg_wait_s(self) -> float | None:
        return avg_wait(self.trips) if self.trips else None

    def trips_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRIP_COLUMNS)
        for t in self.trips:
            w.writerow(t.row())
        return buf.getvalue()

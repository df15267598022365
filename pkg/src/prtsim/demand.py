"""Passenger demand, dwell times, vehicle dispatch and station berths."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np


@dataclass(eq=False)
class PassengerGroup:
    gid: int
    size: int
    origin: str
    dest: str
    t_created: float
    t_board_start: float | None = None
    t_depart: float | None = None
    t_arrive: float | None = None
    vehicle: int | None = None

    @property
    def wait(self) -> float | None:
        if self.t_board_start is None:
            return None
        return self.t_board_start - self.t_created

    @property
    def status(self) -> str:
        if self.t_arrive is not None:
            return "completed"
        if self.t_depart is not None:
            return "riding"
        if self.t_board_start is not None:
            return "boarding"
        if self.vehicle is not None:
            return "waiting"
        return "queued"


@dataclass(frozen=True)
class DemandConfig:
    rate: float = 480.0  # groups per hour
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ValueError("demand rate must be positive")


@dataclass(frozen=True)
class DwellSampler:
    low: float = 10.0
    mode: float = 20.0
    high: float = 30.0

    def __post_init__(self) -> None:
        if not self.low <= self.mode <= self.high or self.low == self.high:
            raise ValueError("need low <= mode <= high with low < high")


def sample_dwell(s: DwellSampler, u: float) -> float:
    """Inverse CDF of the triangular distribution."""
    span = s.high - s.low
    split = (s.mode - s.low) / span
    if u < split:
        return s.low + math.sqrt(u * span * (s.mode - s.low))
    return s.high - math.sqrt((1.0 - u) * span * (s.high - s.mode))


def generate_demand(
    cfg: DemandConfig,
    horizon: float,
    stations: Sequence[str],
    rng: np.random.Generator | None = None,
) -> list[PassengerGroup]:
    """Poisson arrivals at ``cfg.rate`` groups/h over ``[0, horizon)``.

    Origins are uniform over ``stations``, destinations uniform over the rest,
    group sizes uniform over 1-4. Without ``rng`` a generator is seeded from
    ``cfg.seed``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if horizon <= 0:
        return []
    stations = list(stations)
    if len(stations) < 2:
        raise ValueError("need at least two stations")
    mean_gap = 3600.0 / cfg.rate
    groups = []
    t = 0.0
    while True:
        t += rng.exponential(mean_gap)
        if t >= horizon:
            break
        o = int(rng.integers(len(stations)))
        d = int(rng.integers(len(stations) - 1))
        if d >= o:
            d += 1
        size = int(rng.integers(1, 5))
        groups.append(PassengerGroup(len(groups), size, stations[o], stations[d], t))
    return groups


def dispatch_vehicle(
    group: PassengerGroup,
    idle: Mapping[int, str],
    travel_time: Callable[[str, str], float],
) -> int | None:
    """Nearest idle vehicle to the group's origin by nominal time; ties go to the smallest id.

    ``idle`` maps vehicle id to the node it is parked at.
    """
    best = None
    for vid, node in idle.items():
        key = (travel_time(node, group.origin), vid)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


# station tasks a parked vehicle may hold
ALIGHT = "alight"
BOARD = "board"
DEPART = "depart"


@dataclass
class StationState:
    """Serial berths: index 0 is the head, vehicles enter at the tail and leave from the head."""

    node: str
    n_berths: int = 5
    pitch: float = 10.0
    a_max: float = 2.0
    berths: list = field(default_factory=list)
    waiting: deque = field(default_factory=deque)
    overflow_ticks: int = 0

    def __post_init__(self) -> None:
        if not self.berths:
            self.berths = [None] * self.n_berths

    def move_time(self, n: int) -> float:
        """Rest-to-rest time over ``n`` berth pitches at full acceleration then braking."""
        return 2.0 * math.sqrt(n * self.pitch / self.a_max)

    @property
    def occupied(self) -> int:
        return sum(v is not None for v in self.berths)

    def can_enter(self) -> bool:
        return self.berths[-1] is None

    def enter(self, vehicle, clock: float) -> None:
        if not self.can_enter():
            raise RuntimeError(f"station {self.node}: tail berth occupied")
        self.berths[-1] = vehicle
        vehicle.busy_until = clock

    def remove_head(self, vehicle) -> None:
        assert self.berths[0] is vehicle
        self.berths[0] = None


def advance_station(
    st: StationState,
    clock: float,
    start_dwell: Callable[[object, str], None],
) -> list:
    """One tick of berth logic; returns the head vehicle if it is ready to leave.

    Vehicles roll forward over every free berth ahead of them before acting. A
    vehicle at rest with an alight task, or a board task whose group is at the
    station, starts its dwell through ``start_dwell(vehicle, task)``.
    """
    berths = st.berths
    leaving = []
    for k, v in enumerate(berths):
        if v is None or v.busy_until > clock:
            continue
        free = 0
        while k - free - 1 >= 0 and berths[k - free - 1] is None:
            free += 1
        if free:
            berths[k - free] = v
            berths[k] = None
            v.busy_until = clock + st.move_time(free)
            continue
        task = v.task
        if task == ALIGHT:
            start_dwell(v, ALIGHT)
        elif task == BOARD and v.group is not None and v.group in st.waiting:
            start_dwell(v, BOARD)
        elif task == DEPART and k == 0:
            leaving.append(v)
    return leaving

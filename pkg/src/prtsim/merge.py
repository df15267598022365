"""Priority rules at join intersections."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .kinematics import MotionLimits, safe_follow_speed
from .network import SegmentClass


class PriorityPolicy(str, Enum):
    HIGHWAY_FIRST = "highway"
    ROAD_FIRST = "road"
    SLIDER = "slider"


A, B = 0, 1


@dataclass
class JoinController:
    """Grant state of one join.

    ``branches`` are the two incoming segment ids and ``classes`` their segment
    classes, both indexed by branch ``A``/``B``. ``slider_bit`` names the branch
    that wins the next contested resolution decided by alternation.
    """

    join: str
    branches: tuple[str, str]
    classes: tuple[SegmentClass, SegmentClass]
    out_segment: str = ""
    slider_bit: int = A
    holder: object | None = None
    holder_branch: int = A
    contest: tuple[int, int] | None = None  # vehicle pair whose order is already decided
    contested: list[int] = field(default_factory=lambda: [0, 0])
    uncontested: list[int] = field(default_factory=lambda: [0, 0])

    @property
    def mixed(self) -> bool:
        return self.classes[A] is not self.classes[B]


def detect_conflict(eta_a: float, eta_b: float, clearance: float) -> bool:
    """Two approaching vehicles conflict when they would reach the join too close in time."""
    return abs(eta_a - eta_b) < clearance


def resolve(ctrl: JoinController, policy: PriorityPolicy) -> int:
    """Pick the branch that keeps its speed in a contested conflict.

    Class-based policies only apply when the branches differ in class; equal
    classes (and the slider policy itself) alternate via ``slider_bit``.
    """
    if policy is not PriorityPolicy.SLIDER and ctrl.mixed:
        want = SegmentClass.HIGHWAY if policy is PriorityPolicy.HIGHWAY_FIRST else SegmentClass.ROAD
        grant = A if ctrl.classes[A] is want else B
    else:
        grant = ctrl.slider_bit
        ctrl.slider_bit = 1 - grant
    ctrl.contested[grant] += 1
    return grant


def ungranted_speed_cap(distance_to_merge: float, limits: MotionLimits) -> float:
    """Speed cap for a vehicle without a grant, measured as distance to the join node.

    The join acts as a stopped leader, so the vehicle halts at the stop line
    ``s0`` before it.
    """
    return safe_follow_speed(distance_to_merge, limits)

"""Four-arm intersection layout and the direction conflict relation.

Every direction follows an identical straight path measured from its own
spawn point: an approach arm, the shared conflict box, then a departure arm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Axis(enum.IntEnum):
    NS = 0
    EW = 1


class Direction(enum.IntEnum):
    """Approach directions 1..4; 1 and 3 run north-south, 2 and 4 east-west."""

    D1 = 1
    D2 = 2
    D3 = 3
    D4 = 4

    @property
    def axis(self) -> Axis:
        return Axis.NS if self.value % 2 == 1 else Axis.EW


def conflicts(d1: Direction | int, d2: Direction | int) -> bool:
    """True iff straight paths from ``d1`` and ``d2`` cross inside the box."""
    return Direction(d1).axis != Direction(d2).axis


class Line(str, enum.Enum):
    ENTRY = "entry"
    EXIT = "exit"
    END = "end"


@dataclass(frozen=True)
class IntersectionGeometry:
    arm_length: float = 4000.0
    lane_width: float = 3.5

    def __post_init__(self):
        if not self.arm_length > 0:
            raise ValueError(f"arm_length must be > 0, got {self.arm_length}")
        if not self.lane_width > 0:
            raise ValueError(f"lane_width must be > 0, got {self.lane_width}")

    @property
    def box_side(self) -> float:
        # one lane per direction, two lanes per road
        return 2.0 * self.lane_width

    @property
    def entry_line(self) -> float:
        return self.arm_length

    @property
    def exit_line(self) -> float:
        return self.arm_length + self.box_side

    @property
    def path_length(self) -> float:
        return 2.0 * self.arm_length + self.box_side


def position_of_line(g: IntersectionGeometry, which: Line | str) -> float:
    which = Line(which)
    if which is Line.ENTRY:
        return g.entry_line
    if which is Line.EXIT:
        return g.exit_line
    return g.path_length

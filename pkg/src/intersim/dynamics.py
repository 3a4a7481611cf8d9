"""Longitudinal kinematics: integrator, stopping distance, ETA, car following.

The scalar kernels (underscore-prefixed, numba-jitted) are the single source
of truth; the simulation engine calls them directly and the public functions
here wrap them with :class:`VehicleState` / :class:`VehicleParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

from .geometry import Direction

DT = 0.1
HEADWAY = 30.0


class HeadwayInconsistency(RuntimeError):
    """No bounded command keeps the gap, and the gap is already violated."""


@dataclass(frozen=True)
class VehicleParams:
    length: float = 5.0
    width: float = 2.0
    max_speed: float = 15.0
    max_accel: float = 10.0
    max_decel: float = 10.0

    def __post_init__(self):
        for name in ("length", "width", "max_speed", "max_accel", "max_decel"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class VehicleState:
    id: int
    direction: Direction
    front_pos: float
    speed: float
    scheduled_spawn: float = 0.0
    actual_spawn: float = 0.0
    committed: bool = False

    def rear_pos(self, params: VehicleParams) -> float:
        return self.front_pos - params.length


# ---------------------------------------------------------------- kernels


@njit(cache=True)
def _step(x, v, a, dt, vmax):
    # semi-implicit Euler: speed first, then position with the new speed
    v2 = v + a * dt
    if v2 < 0.0:
        v2 = 0.0
    elif v2 > vmax:
        v2 = vmax
    return x + v2 * dt, v2


@njit(cache=True)
def _stopping_distance(v, d):
    return v * v / (2.0 * d)


@njit(cache=True)
def _eta(x, v, target, vmax, amax):
    dist = target - x
    if dist <= 0.0:
        return 0.0
    if v >= vmax:
        return dist / vmax
    t_acc = (vmax - v) / amax
    d_acc = (vmax * vmax - v * v) / (2.0 * amax)
    if dist <= d_acc:
        return (-v + math.sqrt(v * v + 2.0 * amax * dist)) / amax
    return t_acc + (dist - d_acc) / vmax


@njit(cache=True)
def _follow_accel(x, v, xl, vl, leader_len, gap_req, vmax, amax, dmax, dt):
    """Largest of (+amax, 0, -dmax) whose one-tick projection keeps the gap.

    The leader is projected at constant speed. Returns NaN when nothing is
    safe and the current gap is already below ``gap_req - vmax*dt``.
    """
    rear_next = xl - leader_len + vl * dt
    sd_lead = vl * vl / (2.0 * dmax)
    for k in range(3):
        if k == 0:
            a = amax
        elif k == 1:
            a = 0.0
        else:
            a = -dmax
        x2, v2 = _step(x, v, a, dt, vmax)
        surplus = v2 * v2 / (2.0 * dmax) - sd_lead
        if surplus < 0.0:
            surplus = 0.0
        if rear_next - x2 - surplus >= gap_req:
            return a
    if (xl - leader_len) - x < gap_req - vmax * dt - 1e-9:
        return math.nan
    return -dmax


# ---------------------------------------------------------------- public API


def step(s: VehicleState, a: float, params: VehicleParams, dt: float = DT) -> VehicleState:
    """Advance one vehicle by ``dt`` under command ``a``."""
    if not (math.isfinite(s.front_pos) and math.isfinite(s.speed) and math.isfinite(a)):
        raise ValueError("non-finite vehicle state or command")
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and > 0, got {dt}")
    if not -params.max_decel <= a <= params.max_accel:
        raise ValueError(f"command {a} outside [-{params.max_decel}, {params.max_accel}]")
    x, v = _step(s.front_pos, s.speed, a, dt, params.max_speed)
    return replace(s, front_pos=x, speed=v)


def stopping_distance(v: float, d: float) -> float:
    if v < 0 or d <= 0:
        raise ValueError("need v >= 0 and d > 0")
    return _stopping_distance(v, d)


def eta_to(s: VehicleState, target: float, params: VehicleParams) -> float:
    """Earliest arrival of the front bumper at ``target`` (accelerate, then cruise)."""
    return _eta(s.front_pos, s.speed, target, params.max_speed, params.max_accel)


def clear_time(s: VehicleState, exit_line: float, params: VehicleParams) -> float:
    """Earliest time the rear bumper is beyond ``exit_line``."""
    return eta_to(s, exit_line + params.length, params)


def car_following_accel(
    follower: VehicleState,
    params: VehicleParams,
    leader: VehicleState | None = None,
    stop_target: float | None = None,
    headway: float = HEADWAY,
    dt: float = DT,
) -> float:
    """Three-level headway-keeping command.

    With a ``leader`` the bumper gap minus the follower's stopping-distance
    surplus must stay >= ``headway`` after one tick. A ``stop_target`` acts
    as a zero-length stationary leader with no required gap. Passing both
    returns the more restrictive command.
    """
    cmds = []
    args = (params.max_speed, params.max_accel, params.max_decel, dt)
    if leader is not None:
        cmds.append(
            _follow_accel(follower.front_pos, follower.speed, leader.front_pos,
                          leader.speed, params.length, headway, *args)
        )
    if stop_target is not None:
        cmds.append(
            _follow_accel(follower.front_pos, follower.speed, stop_target,
                          0.0, 0.0, 0.0, *args)
        )
    if not cmds:
        return params.max_accel
    if any(math.isnan(c) for c in cmds):
        raise HeadwayInconsistency(
            f"vehicle {follower.id}: no safe command and gap already violated"
        )
    return min(cmds)

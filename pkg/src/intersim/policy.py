"""Intersection control policies: fixed-cycle lights and V2V reservation.

Both map a world snapshot to a PASS/BRAKE decision per uncommitted vehicle.
The V2V protocol is formally distributed, but every vehicle sees the same
exact snapshot and runs the same deterministic ordering, so a single
evaluation per tick yields exactly the decisions each vehicle would reach.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .dynamics import VehicleParams, VehicleState, _eta
from .geometry import Axis, IntersectionGeometry

MARGIN = 0.1

PASS = 0
BRAKE = 1
GREEN = 0
YELLOW = 1
RED = 2


class Decision(enum.IntEnum):
    PASS = PASS
    BRAKE = BRAKE


class Phase(enum.IntEnum):
    GREEN = GREEN
    YELLOW = YELLOW
    RED = RED


@dataclass(frozen=True)
class LightSchedule:
    green: float = 30.0
    yellow: float = 3.0
    red: float = 33.0
    phase_origin: Axis = Axis.NS

    def __post_init__(self):
        for name in ("green", "yellow", "red"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if abs(self.green + self.yellow - self.red) > 1e-9:
            raise ValueError(
                f"green + yellow must equal red so the axes alternate "
                f"({self.green} + {self.yellow} != {self.red})"
            )

    @property
    def cycle(self) -> float:
        return self.green + self.yellow + self.red


@njit(cache=True)
def _phase_from_offset(u, green, yellow, red, is_origin):
    """Phase code at offset ``u`` into the cycle (same units for all args)."""
    if not is_origin:
        u = u - red if u >= red else u + green + yellow
    if u < green:
        return GREEN
    if u < green + yellow:
        return YELLOW
    return RED


def phase_at(s: LightSchedule, t: float, axis: Axis) -> Phase:
    if t < 0:
        raise ValueError("t must be >= 0")
    u = round(math.fmod(t, s.cycle), 9)
    if u >= s.cycle:
        u -= s.cycle
    return Phase(_phase_from_offset(u, s.green, s.yellow, s.red, Axis(axis) == s.phase_origin))


@njit(cache=True)
def _light_decide(dist, v, phase, dmax):
    if dist < 0.0 or phase == GREEN:
        return PASS
    if phase == YELLOW and dist < v * v / (2.0 * dmax):
        # past the point of no return
        return PASS
    return BRAKE


def light_decision(
    v: VehicleState,
    s: LightSchedule,
    g: IntersectionGeometry,
    t: float,
    params: VehicleParams = VehicleParams(),
) -> Decision:
    if v.committed:
        return Decision.PASS
    phase = phase_at(s, t, v.direction.axis)
    return Decision(_light_decide(g.entry_line - v.front_pos, v.speed, int(phase), params.max_decel))


# ---------------------------------------------------------------- V2V


@njit(cache=True)
def _priority(dirs, ids, etas):
    """Indices sorted by ETA, then direction index, then vehicle id."""
    o1 = np.argsort(ids, kind="mergesort")
    o2 = o1[np.argsort(dirs[o1], kind="mergesort")]
    return o2[np.argsort(etas[o2], kind="mergesort")]


@njit(cache=True)
def _v2v_decide(dirs, pos, spd, ids, committed, entry, exit_, length, vmax, amax, dmax, margin):
    """FCFS reservation of conflict-box time slots, rebuilt from scratch.

    Committed vehicles and vehicles that can no longer stop before the
    entry line hold their slots unconditionally; the rest bid in priority
    order and pass only if their margin-widened slot avoids every slot
    already held by the crossing axis.
    """
    n = dirs.shape[0]
    out = np.zeros(n, dtype=np.int8)
    seed_s = np.empty(n)
    seed_e = np.empty(n)
    seed_ax = np.empty(n, dtype=np.int64)
    n_seed = 0
    cand = np.empty(n, dtype=np.int64)
    n_cand = 0
    clear_pt = exit_ + length
    for i in range(n):
        if committed[i]:
            ce = _eta(pos[i], spd[i], clear_pt, vmax, amax)
            if ce > 0.0:
                seed_s[n_seed] = 0.0
                seed_e[n_seed] = ce
                seed_ax[n_seed] = (dirs[i] + 1) % 2
                n_seed += 1
        elif entry - pos[i] < spd[i] * spd[i] / (2.0 * dmax):
            seed_s[n_seed] = _eta(pos[i], spd[i], entry, vmax, amax)
            seed_e[n_seed] = _eta(pos[i], spd[i], clear_pt, vmax, amax)
            seed_ax[n_seed] = (dirs[i] + 1) % 2
            n_seed += 1
        else:
            cand[n_cand] = i
            n_cand += 1
    if n_cand == 0:
        return out
    cand = cand[:n_cand]
    etas = np.empty(n_cand)
    for k in range(n_cand):
        i = cand[k]
        etas[k] = _eta(pos[i], spd[i], entry, vmax, amax)
    order = _priority(dirs[cand], ids[cand], etas)
    granted_end = np.full(2, -np.inf)
    for k in order:
        i = cand[k]
        ax = (dirs[i] + 1) % 2
        other = 1 - ax
        s = etas[k]
        e = _eta(pos[i], spd[i], clear_pt, vmax, amax)
        # earlier grants start no later than s, so overlap reduces to end > s - margin
        ok = granted_end[other] <= s - margin
        if ok:
            for j in range(n_seed):
                if seed_ax[j] == other and seed_s[j] < e + margin and seed_e[j] > s - margin:
                    ok = False
                    break
        if ok:
            if e > granted_end[ax]:
                granted_end[ax] = e
        else:
            out[i] = BRAKE
    return out


def _pack(world: Sequence[VehicleState]):
    dirs = np.array([int(v.direction) for v in world], dtype=np.int64)
    ids = np.array([v.id for v in world], dtype=np.int64)
    pos = np.array([v.front_pos for v in world], dtype=np.float64)
    spd = np.array([v.speed for v in world], dtype=np.float64)
    committed = np.array([v.committed for v in world], dtype=np.bool_)
    return dirs, ids, pos, spd, committed


def v2v_priority(
    candidates: Sequence[VehicleState],
    g: IntersectionGeometry,
    params: VehicleParams = VehicleParams(),
) -> list[VehicleState]:
    if not candidates:
        return []
    dirs, ids, pos, spd, _ = _pack(candidates)
    etas = np.array([_eta(x, v, g.entry_line, params.max_speed, params.max_accel)
                     for x, v in zip(pos, spd)])
    return [candidates[i] for i in _priority(dirs, ids, etas)]


def v2v_decision(
    world: Sequence[VehicleState],
    g: IntersectionGeometry,
    params: VehicleParams = VehicleParams(),
    margin: float = MARGIN,
) -> dict[int, Decision]:
    """Decisions keyed by vehicle id; committed vehicles always PASS."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if not world:
        return {}
    dirs, ids, pos, spd, committed = _pack(world)
    out = _v2v_decide(dirs, pos, spd, ids, committed, g.entry_line, g.exit_line,
                      params.length, params.max_speed, params.max_accel,
                      params.max_decel, margin)
    return {int(i): Decision(int(d)) for i, d in zip(ids, out)}

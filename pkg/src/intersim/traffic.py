"""Seeded arrival generation and the per-direction spawn queue.

Random numbers come from PCG64 (PCG XSL-RR 128/64) seeded through numpy's
``SeedSequence``. Direction ``d`` uses ``SeedSequence(seed, spawn_key=(d,))``
so each approach has an independent stream, and a uniform double is formed
from the top 53 bits of each raw 64-bit output. Both steps are fixed
algorithms, so schedules are identical on every platform.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import DT, HEADWAY, VehicleParams, VehicleState
from .geometry import Direction

_CHUNK = 256


@dataclass(frozen=True)
class ArrivalProcess:
    direction: Direction
    mean_interarrival: float
    spawn_window: float
    seed: int = 0

    def __post_init__(self):
        if not self.mean_interarrival > 0.5:
            raise ValueError(
                f"T{int(self.direction)}={self.mean_interarrival}: mean inter-arrival must be "
                "> 0.5 s so the uniform support [T-0.5, T+0.5] stays positive"
            )
        if not self.spawn_window > 0:
            raise ValueError(f"spawn_window must be > 0, got {self.spawn_window}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


def direction_stream(seed: int, direction: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(int(direction),)))


def uniform_doubles(bitgen: np.random.PCG64, n: int) -> np.ndarray:
    raw = bitgen.random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def generate_arrivals(p: ArrivalProcess) -> list[float]:
    """Scheduled arrival times on ``(0, spawn_window]`` for one direction."""
    if math.isinf(p.mean_interarrival):
        return []
    bitgen = direction_stream(p.seed, p.direction)
    lo = p.mean_interarrival - 0.5
    out: list[float] = []
    t = 0.0
    while True:
        for u in uniform_doubles(bitgen, _CHUNK):
            t += lo + float(u)
            if t > p.spawn_window:
                return out
            out.append(t)


def schedule_all(
    means: dict[Direction, float], spawn_window: float, seed: int
) -> dict[Direction, list[tuple[float, int]]]:
    """Arrival schedules for all four directions with global vehicle ids.

    Ids number vehicles by scheduled time, ties broken by direction index.
    """
    times = {
        d: generate_arrivals(ArrivalProcess(d, means[d], spawn_window, seed))
        for d in Direction
    }
    flat = sorted((t, int(d)) for d, ts in times.items() for t in ts)
    ids = {key: i for i, key in enumerate(flat)}
    return {d: [(t, ids[(t, int(d))]) for t in ts] for d, ts in times.items()}


@njit(cache=True)
def _spawn_ok(has_vehicle, rearmost_rear, rearmost_speed, headway, vmax, dmax, dt):
    if not has_vehicle:
        return True
    # a full-speed entrant must also be able to stop behind a slower tail
    surplus = (vmax * vmax - rearmost_speed * rearmost_speed) / (2.0 * dmax)
    if surplus < 0.0:
        surplus = 0.0
    return rearmost_rear >= headway + vmax * dt + surplus


@dataclass
class SpawnQueue:
    """Scheduled arrivals not yet on the road, FIFO per direction."""

    pending: dict[Direction, deque] = field(default_factory=dict)

    @classmethod
    def from_schedule(cls, schedule: dict[Direction, list[tuple[float, int]]]) -> "SpawnQueue":
        return cls({d: deque(schedule.get(d, [])) for d in Direction})

    def waiting(self, t: float) -> int:
        return sum(1 for q in self.pending.values() for s, _ in q if s <= t)

    def __len__(self) -> int:
        return sum(len(q) for q in self.pending.values())


def try_spawn(
    q: SpawnQueue,
    road: list[VehicleState],
    t: float,
    params: VehicleParams,
    headway: float = HEADWAY,
    dt: float = DT,
) -> list[VehicleState]:
    """Admit at most one due arrival per direction at time ``t``.

    A vehicle enters at position 0 and full speed only when the rearmost
    vehicle of its direction is at least one headway plus one tick of
    travel past the spawn point, plus the entrant's stopping-distance
    surplus over that vehicle when it is slower.
    """
    spawned = []
    for d in Direction:
        pending = q.pending.get(d)
        if not pending or pending[0][0] > t:
            continue
        same = [v for v in road if v.direction == d]
        tail = min(same, key=lambda v: v.front_pos) if same else None
        rear = tail.front_pos - params.length if tail else 0.0
        speed = tail.speed if tail else 0.0
        if not _spawn_ok(tail is not None, rear, speed, headway, params.max_speed,
                         params.max_decel, dt):
            continue
        sched, vid = pending.popleft()
        spawned.append(
            VehicleState(vid, d, 0.0, params.max_speed, scheduled_spawn=sched, actual_spawn=t)
        )
    return spawned

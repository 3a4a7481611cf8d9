"""Deterministic 0.1 s tick loop binding arrivals, policy and dynamics.

Phase order inside one tick (canonical, never reordered):

1. snapshot the world at time ``t``
2. policy decisions for every uncommitted vehicle
3. accel commands: PASS follows the same-lane leader; BRAKE additionally
   stops at the entry line, taking the more restrictive command
4. integrate every vehicle
5. mark vehicles whose front crossed the entry line as committed
6. despawn vehicles whose rear passed the path end
7. admit due arrivals at the spawn points
8. advance the clock to ``t + dt``

Vehicles of one direction never overtake, so each lane is stored as a
contiguous slice ``[head, tail)`` of per-direction arrays indexed by
arrival order; despawning bumps ``head`` and spawning bumps ``tail``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import DT, HEADWAY, VehicleParams, VehicleState, _follow_accel, _step
from .geometry import Axis, Direction, IntersectionGeometry
from .policy import BRAKE, MARGIN, PASS, RED, LightSchedule, _light_decide, _phase_from_offset, _v2v_decide
from .traffic import _spawn_ok, schedule_all

LOG = logging.getLogger(__name__)

POLICIES = ("light", "v2v")

# advance() status codes
RUNNING = 0
DONE = 1
CAPPED = 2
BUFFER_FULL = 3
STOPPED = 4

# violation kinds
MUTEX = 1
RED_ENTRY = 2
HEADWAY_GAP = 3
OVERLAP = 4
INCONSISTENT = 5

VIOLATION_NAMES = {
    MUTEX: "box-co-occupancy",
    RED_ENTRY: "red-entry",
    HEADWAY_GAP: "headway",
    OVERLAP: "overlap",
    INCONSISTENT: "no-safe-command",
}


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: IntersectionGeometry = field(default_factory=IntersectionGeometry)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    T: tuple[float, float, float, float] = (3.0, 3.0, 3.0, 3.0)
    policy: str = "light"
    margin: float = MARGIN
    light: LightSchedule = field(default_factory=LightSchedule)
    seed: int = 0
    spawn_window: float = 1800.0
    drain_cap: float = 7200.0
    dt: float = DT

    def __post_init__(self):
        if len(self.T) != 4:
            raise ValueError("T must hold one mean inter-arrival per direction")
        for d, t in enumerate(self.T, start=1):
            if not t > 0.5:
                raise ValueError(
                    f"T{d}={t}: mean inter-arrival must be > 0.5 s so the uniform "
                    "support [T-0.5, T+0.5] stays positive"
                )
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.margin >= 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.dt != DT:
            raise ValueError(f"dt must be {DT} (the decision cadence), got {self.dt}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        for name in ("spawn_window", "drain_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("green", "yellow", "red"):
            ticks = getattr(self.light, name) / self.dt
            if abs(ticks - round(ticks)) > 1e-6:
                raise ValueError(f"{name} duration must be a whole number of ticks")

    def mean_interarrival(self) -> dict[Direction, float]:
        return {d: self.T[int(d) - 1] for d in Direction}

    @property
    def free_flow_time(self) -> float:
        return self.geometry.path_length / self.vehicle.max_speed


# ---------------------------------------------------------------- kernel


@njit(cache=True)
def _decide(head, tail, pos, spd, vid, dec, committed_tick, tick, fp, ip, ev_tick, ev_vid, ev_code, ev_n):
    entry = fp[0]
    dmax = fp[6]
    policy = ip[0]
    if policy == 0:
        cycle = ip[4]
        u = tick % cycle
        for k in range(4):
            on_origin = (k % 2) == ip[5]
            phase = _phase_from_offset(u, ip[1], ip[2], ip[3], on_origin)
            for i in range(head[k], tail[k]):
                if committed_tick[k, i] >= 0:
                    d = PASS
                else:
                    d = _light_decide(entry - pos[k, i], spd[k, i], phase, dmax)
                if d != dec[k, i]:
                    ev_tick[ev_n] = tick
                    ev_vid[ev_n] = vid[k, i]
                    ev_code[ev_n] = d
                    ev_n += 1
                    dec[k, i] = d
        return ev_n
    n = 0
    for k in range(4):
        n += tail[k] - head[k]
    dirs = np.empty(n, dtype=np.int64)
    ids = np.empty(n, dtype=np.int64)
    xs = np.empty(n)
    vs = np.empty(n)
    com = np.empty(n, dtype=np.bool_)
    j = 0
    for k in range(4):
        for i in range(head[k], tail[k]):
            dirs[j] = k + 1
            ids[j] = vid[k, i]
            xs[j] = pos[k, i]
            vs[j] = spd[k, i]
            com[j] = committed_tick[k, i] >= 0
            j += 1
    out = _v2v_decide(dirs, xs, vs, ids, com, entry, fp[1], fp[3], fp[4], fp[5], dmax, fp[9])
    j = 0
    for k in range(4):
        for i in range(head[k], tail[k]):
            d = out[j]
            j += 1
            if d != dec[k, i]:
                ev_tick[ev_n] = tick
                ev_vid[ev_n] = vid[k, i]
                ev_code[ev_n] = d
                ev_n += 1
                dec[k, i] = d
    return ev_n


@njit(cache=True)
def _advance(
    max_ticks, clock, head, tail, n_arr, sched, vid, pos, spd, acc, dec,
    spawn_tick, commit_tick, clear_tick, despawn_tick, exit_time, fp, ip,
    ev_tick, ev_vid, ev_code, ev_count, vi_tick, vi_kind, vi_a, vi_b, vi_val, vi_count,
):
    entry = fp[0]
    exit_ = fp[1]
    path_len = fp[2]
    length = fp[3]
    vmax = fp[4]
    amax = fp[5]
    dmax = fp[6]
    headway = fp[7]
    dt = fp[8]
    window = fp[10]
    cap = fp[11]
    strict = ip[6] != 0
    gap_floor = headway - vmax * dt - 1e-9

    for _ in range(max_ticks):
        tick = clock[0]
        t = tick * dt
        on_road = 0
        for k in range(4):
            on_road += tail[k] - head[k]
        if t >= window:
            finished = True
            for k in range(4):
                if head[k] < n_arr[k]:
                    finished = False
            if finished:
                return DONE
            if t >= window + cap - 1e-9:
                return CAPPED
        if ev_tick.shape[0] - ev_count[0] < on_road + 4 or vi_tick.shape[0] - vi_count[0] < 4 * on_road + 8:
            return BUFFER_FULL

        # (1)-(2) decisions on the snapshot at t
        ev_count[0] = _decide(head, tail, pos, spd, vid, dec, commit_tick, tick, fp, ip,
                              ev_tick, ev_vid, ev_code, ev_count[0])

        # (3) commands
        bad = False
        for k in range(4):
            for i in range(head[k], tail[k]):
                if i > head[k]:
                    a = _follow_accel(pos[k, i], spd[k, i], pos[k, i - 1], spd[k, i - 1],
                                      length, headway, vmax, amax, dmax, dt)
                else:
                    a = amax
                if dec[k, i] == BRAKE and commit_tick[k, i] < 0:
                    b = _follow_accel(pos[k, i], spd[k, i], entry, 0.0, 0.0, 0.0,
                                      vmax, amax, dmax, dt)
                    if math.isnan(b) or b < a:
                        a = b
                if math.isnan(a):
                    n = vi_count[0]
                    vi_tick[n] = tick
                    vi_kind[n] = INCONSISTENT
                    vi_a[n] = vid[k, i]
                    vi_b[n] = -1
                    vi_val[n] = pos[k, i]
                    vi_count[0] = n + 1
                    bad = True
                    a = -dmax
                acc[k, i] = a

        # (4) integrate
        new_tick = tick + 1
        for k in range(4):
            for i in range(head[k], tail[k]):
                prev_x = pos[k, i]
                x2, v2 = _step(prev_x, spd[k, i], acc[k, i], dt, vmax)
                pos[k, i] = x2
                spd[k, i] = v2
                # (5) commitment and bookkeeping of line crossings
                if commit_tick[k, i] < 0 and x2 > entry:
                    commit_tick[k, i] = new_tick
                    if ip[0] == 0:
                        on_origin = (k % 2) == ip[5]
                        ph = _phase_from_offset(tick % ip[4], ip[1], ip[2], ip[3], on_origin)
                        if ph == RED:
                            n = vi_count[0]
                            vi_tick[n] = tick
                            vi_kind[n] = RED_ENTRY
                            vi_a[n] = vid[k, i]
                            vi_b[n] = -1
                            vi_val[n] = x2
                            vi_count[0] = n + 1
                            bad = True
                if clear_tick[k, i] < 0 and x2 - length > exit_:
                    clear_tick[k, i] = new_tick
                if prev_x < path_len <= x2:
                    exit_time[k, i] = (tick + (path_len - prev_x) / (x2 - prev_x)) * dt

        # (6) despawn
        for k in range(4):
            while head[k] < tail[k] and pos[k, head[k]] - length >= path_len:
                despawn_tick[k, head[k]] = new_tick
                head[k] += 1

        # (7) spawn
        t_new = new_tick * dt
        for k in range(4):
            i = tail[k]
            if i < n_arr[k] and sched[k, i] <= t_new:
                has = tail[k] > head[k]
                rear = pos[k, i - 1] - length if has else 0.0
                rear_v = spd[k, i - 1] if has else 0.0
                if _spawn_ok(has, rear, rear_v, headway, vmax, dmax, dt):
                    pos[k, i] = 0.0
                    spd[k, i] = vmax
                    acc[k, i] = 0.0
                    spawn_tick[k, i] = new_tick
                    tail[k] = i + 1

        # invariants on the new state
        occ_ns = -1
        occ_ew = -1
        for k in range(4):
            for i in range(head[k], tail[k]):
                if i > head[k]:
                    gap = pos[k, i - 1] - length - pos[k, i]
                    if gap < gap_floor:
                        n = vi_count[0]
                        vi_tick[n] = new_tick
                        vi_kind[n] = OVERLAP if gap < 0.0 else HEADWAY_GAP
                        vi_a[n] = vid[k, i - 1]
                        vi_b[n] = vid[k, i]
                        vi_val[n] = gap
                        vi_count[0] = n + 1
                        bad = True
                if pos[k, i] > entry and pos[k, i] - length < exit_:
                    if k % 2 == 0:
                        occ_ns = vid[k, i]
                    else:
                        occ_ew = vid[k, i]
        if occ_ns >= 0 and occ_ew >= 0:
            n = vi_count[0]
            vi_tick[n] = new_tick
            vi_kind[n] = MUTEX
            vi_a[n] = occ_ns
            vi_b[n] = occ_ew
            vi_val[n] = 0.0
            vi_count[0] = n + 1
            bad = True

        # (8)
        clock[0] = new_tick
        if bad and strict:
            return STOPPED
    return RUNNING


# ---------------------------------------------------------------- wrapper


@dataclass(frozen=True)
class Violation:
    time: float
    kind: str
    vehicle: int
    other: int
    value: float


@dataclass
class SimResult:
    config: ScenarioConfig
    vehicle_ids: np.ndarray
    directions: np.ndarray
    scheduled: np.ndarray
    spawned: np.ndarray
    committed: np.ndarray
    cleared: np.ndarray
    despawned: np.ndarray
    exit_time: np.ndarray
    decision_events: np.ndarray
    violations: list[Violation]
    status: str
    end_time: float

    @property
    def drained(self) -> bool:
        return self.status == "done"

    @property
    def non_drained(self) -> list[int]:
        return sorted(int(v) for v in self.vehicle_ids[np.isnan(self.despawned)])

    def delay_records(self):
        from .metrics import DelayRecord, delay_of

        cfg = self.config
        done = ~np.isnan(self.despawned)
        order = np.argsort(self.vehicle_ids[done], kind="mergesort")
        recs = []
        for vid, d, s, e in zip(self.vehicle_ids[done][order], self.directions[done][order],
                                self.scheduled[done][order], self.exit_time[done][order]):
            delay = delay_of(float(s), float(e), cfg.geometry, cfg.vehicle)
            recs.append(DelayRecord(int(vid), Direction(int(d)), float(s), float(e), delay))
        return recs

    def events(self) -> list[tuple[float, int, str, str]]:
        """Event log as (time, vehicle id, event, detail), time-ordered."""
        # within one instant: end-of-tick bookkeeping, then next tick's decisions
        rank = {"scheduled": 0, "committed": 1, "cleared": 2, "despawned": 3, "spawned": 4,
                "decision-changed": 5}
        rows = []
        for col, name in ((self.scheduled, "scheduled"), (self.spawned, "spawned"),
                          (self.committed, "committed"), (self.cleared, "cleared"),
                          (self.despawned, "despawned")):
            for vid, t in zip(self.vehicle_ids, col):
                if not np.isnan(t):
                    rows.append((float(t), int(vid), name, ""))
        dt = self.config.dt
        for tick, vid, code in self.decision_events:
            rows.append((int(tick) * dt, int(vid), "decision-changed",
                         "PASS" if code == PASS else "BRAKE"))
        rows.sort(key=lambda r: (r[0], rank[r[2]], r[1]))
        return rows


class Simulation:
    """One scenario's world state; strictly single-threaded."""

    def __init__(self, cfg: ScenarioConfig, strict: bool = False):
        self.cfg = cfg
        self.strict = strict
        g, p = cfg.geometry, cfg.vehicle
        schedule = schedule_all(cfg.mean_interarrival(), cfg.spawn_window, cfg.seed)
        n = max(1, max(len(s) for s in schedule.values()))
        self.n_arr = np.array([len(schedule[d]) for d in Direction], dtype=np.int64)
        self.sched = np.full((4, n), np.inf)
        self.vid = np.full((4, n), -1, dtype=np.int64)
        for k, d in enumerate(Direction):
            for i, (t, v) in enumerate(schedule[d]):
                self.sched[k, i] = t
                self.vid[k, i] = v
        self.pos = np.zeros((4, n))
        self.spd = np.zeros((4, n))
        self.acc = np.zeros((4, n))
        self.dec = np.full((4, n), -1, dtype=np.int8)
        self.spawn_tick = np.full((4, n), -1, dtype=np.int64)
        self.commit_tick = np.full((4, n), -1, dtype=np.int64)
        self.clear_tick = np.full((4, n), -1, dtype=np.int64)
        self.despawn_tick = np.full((4, n), -1, dtype=np.int64)
        self.exit_time = np.full((4, n), np.nan)
        self.head = np.zeros(4, dtype=np.int64)
        self.tail = np.zeros(4, dtype=np.int64)
        self.clock = np.zeros(1, dtype=np.int64)
        ticks = [round(getattr(cfg.light, name) / cfg.dt) for name in ("green", "yellow", "red")]
        self.fp = np.array([
            g.entry_line, g.exit_line, g.path_length, p.length, p.max_speed, p.max_accel,
            p.max_decel, HEADWAY, cfg.dt, cfg.margin, cfg.spawn_window, cfg.drain_cap,
        ])
        self.ip = np.array([
            POLICIES.index(cfg.policy), *ticks, sum(ticks),
            0 if cfg.light.phase_origin == Axis.NS else 1, int(strict),
        ], dtype=np.int64)
        self._ev = [np.empty(4096, dtype=np.int64), np.empty(4096, dtype=np.int64),
                    np.empty(4096, dtype=np.int8)]
        self._ev_count = np.zeros(1, dtype=np.int64)
        self._vi = [np.empty(1024, dtype=np.int64), np.empty(1024, dtype=np.int64),
                    np.empty(1024, dtype=np.int64), np.empty(1024, dtype=np.int64),
                    np.empty(1024)]
        self._vi_count = np.zeros(1, dtype=np.int64)
        self.status = "running"

    @property
    def time(self) -> float:
        return int(self.clock[0]) * self.cfg.dt

    def _grow(self):
        self._ev = [np.concatenate([a, np.empty_like(a)]) for a in self._ev]
        self._vi = [np.concatenate([a, np.empty_like(a)]) for a in self._vi]

    def advance(self, max_ticks: int) -> int:
        while True:
            code = _advance(
                max_ticks, self.clock, self.head, self.tail, self.n_arr, self.sched, self.vid,
                self.pos, self.spd, self.acc, self.dec, self.spawn_tick, self.commit_tick,
                self.clear_tick, self.despawn_tick, self.exit_time, self.fp, self.ip,
                *self._ev, self._ev_count, *self._vi, self._vi_count,
            )
            if code != BUFFER_FULL:
                break
            self._grow()
        self.status = {RUNNING: "running", DONE: "done", CAPPED: "drain-capped",
                       STOPPED: "violation"}[code]
        return code

    def tick(self) -> "Simulation":
        self.advance(1)
        return self

    def run(self) -> SimResult:
        while self.advance(1 << 30) == RUNNING:
            pass
        if self.status == "drain-capped":
            LOG.warning("seed %d: drain cap hit with %d vehicles outstanding",
                        self.cfg.seed, int((self.n_arr - self.head).sum()))
        result = self.result()
        if self.strict and result.violations:
            v = result.violations[0]
            raise InvariantViolation(
                f"{v.kind} at t={v.time:.1f}s (vehicles {v.vehicle}, {v.other}, value {v.value:.3f})"
            )
        return result

    def vehicles(self) -> list[VehicleState]:
        out = []
        for k, d in enumerate(Direction):
            for i in range(self.head[k], self.tail[k]):
                out.append(VehicleState(
                    int(self.vid[k, i]), d, float(self.pos[k, i]), float(self.spd[k, i]),
                    float(self.sched[k, i]), float(self.spawn_tick[k, i] * self.cfg.dt),
                    bool(self.commit_tick[k, i] >= 0),
                ))
        return out

    def counts(self) -> dict[str, int]:
        t = self.time
        queued = int(sum(
            np.count_nonzero(self.sched[k, self.tail[k]:self.n_arr[k]] <= t) for k in range(4)
        ))
        return {
            "spawned": int(self.tail.sum()),
            "despawned": int(self.head.sum()),
            "on_road": int((self.tail - self.head).sum()),
            "queued": queued,
        }

    def result(self) -> SimResult:
        dt = self.cfg.dt
        mask = self.vid >= 0

        def ticks_to_time(a):
            out = a.astype(np.float64) * dt
            out[a < 0] = np.nan
            return out[mask]

        n_ev = int(self._ev_count[0])
        events = np.stack([a[:n_ev].astype(np.int64) for a in self._ev], axis=1) if n_ev else np.empty((0, 3), np.int64)
        viol = []
        for i in range(int(self._vi_count[0])):
            viol.append(Violation(
                float(self._vi[0][i] * dt), VIOLATION_NAMES[int(self._vi[1][i])],
                int(self._vi[2][i]), int(self._vi[3][i]), float(self._vi[4][i]),
            ))
        dirs = np.broadcast_to(np.arange(1, 5)[:, None], self.vid.shape)
        return SimResult(
            config=self.cfg,
            vehicle_ids=self.vid[mask],
            directions=dirs[mask],
            scheduled=self.sched[mask],
            spawned=ticks_to_time(self.spawn_tick),
            committed=ticks_to_time(self.commit_tick),
            cleared=ticks_to_time(self.clear_tick),
            despawned=ticks_to_time(self.despawn_tick),
            exit_time=self.exit_time[mask],
            decision_events=events,
            violations=viol,
            status=self.status,
            end_time=self.time,
        )


def run(cfg: ScenarioConfig, strict: bool = False) -> SimResult:
    return Simulation(cfg, strict=strict).run()

"""Per-vehicle intersection delay, empirical CDFs and summary statistics.

Quantiles use the lower empirical convention: ``quantile(q)`` is the
smallest observed delay ``x`` with ``F(x) >= q`` (no interpolation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dynamics import DT, VehicleParams
from .geometry import Direction, IntersectionGeometry

EXCEEDANCE_THRESHOLD = 20.0


class DelayInconsistency(ValueError):
    """A vehicle finished faster than free flow by more than one tick."""


@dataclass(frozen=True)
class DelayRecord:
    id: int
    direction: Direction
    scheduled_spawn: float
    exit_time: float
    delay: float


def delay_of(
    spawned: float,
    exited: float,
    g: IntersectionGeometry = IntersectionGeometry(),
    params: VehicleParams = VehicleParams(),
) -> float:
    """Traversal time beyond free flow, measured from the scheduled spawn."""
    if exited < spawned:
        raise DelayInconsistency(f"exit {exited} precedes spawn {spawned}")
    delay = exited - spawned - g.path_length / params.max_speed
    if delay < 0:
        if delay < -DT:
            raise DelayInconsistency(f"delay {delay:.4f} s is below free flow by more than one tick")
        delay = 0.0
    return delay


def _delays(records: Iterable[DelayRecord | float]) -> np.ndarray:
    return np.array([r.delay if isinstance(r, DelayRecord) else float(r) for r in records],
                    dtype=np.float64)


class EmpiricalCDF:
    def __init__(self, delays: Sequence[float] | np.ndarray):
        self.values = np.sort(np.asarray(delays, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, x: float) -> float:
        if not len(self.values):
            raise ValueError("CDF of an empty sample is undefined")
        return float(np.searchsorted(self.values, x, side="right")) / len(self.values)

    def table(self) -> list[tuple[float, float]]:
        """(delay, F(delay)) at each distinct delay, ready to plot as steps."""
        uniq, counts = np.unique(self.values, return_counts=True)
        cum = np.cumsum(counts)
        return [(float(x), int(c) / len(self.values)) for x, c in zip(uniq, cum)]


def cdf(records: Iterable[DelayRecord | float]) -> EmpiricalCDF:
    return EmpiricalCDF(_delays(records))


def quantile(c: EmpiricalCDF, q: float) -> float:
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    n = len(c.values)
    if n == 0:
        raise ValueError("quantile of an empty sample")
    # round before ceil so e.g. 0.3 * 100 lands on rank 30, not 31
    k = max(1, math.ceil(round(q * n, 9)))
    return float(c.values[k - 1])


def median(records: Iterable[DelayRecord | float]) -> float:
    return quantile(cdf(records), 0.5)


def exceedance_fraction(records: Iterable[DelayRecord | float], threshold: float) -> float:
    d = _delays(records)
    if not len(d):
        raise ValueError("exceedance fraction of an empty sample")
    return float(np.count_nonzero(d > threshold)) / len(d)


def summarize(records: Sequence[DelayRecord]) -> list[dict]:
    """Pooled plus per-direction summary rows."""
    groups = [("pooled", list(records))]
    groups += [(f"dir{int(d)}", [r for r in records if r.direction == d]) for d in Direction]
    rows = []
    for scope, recs in groups:
        d = _delays(recs)
        if len(d):
            rows.append({
                "scope": scope, "count": len(d), "median": median(d),
                "exceed_20s": exceedance_fraction(d, EXCEEDANCE_THRESHOLD),
                "mean": float(d.mean()), "max": float(d.max()),
            })
        else:
            rows.append({"scope": scope, "count": 0, "median": math.nan,
                         "exceed_20s": math.nan, "mean": math.nan, "max": math.nan})
    return rows

"""Experiment suites, multi-seed sweeps and CSV outputs.

Each run writes one directory ``<out>/<suite>/<point>/<policy>/seed<N>/``::

    delays.csv    id,direction,scheduled_spawn,exit_time,delay
    cdf.csv       scope,delay,cdf        (pooled and dir1..dir4)
    summary.csv   scope,count,median,exceed_20s,mean,max,status,non_drained,spawn_window
    events.csv    time,vehicle,event,detail
    manifest.ini  the fully resolved scenario (re-runnable as a --config)

Times and delays are written with 4 decimals, fractions with 6, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .config import format_scenario
from .engine import ScenarioConfig, SimResult, run
from .metrics import cdf, summarize

LOG = logging.getLogger(__name__)

EVEN_T = (3.0, 4.0, 10.0)
UNEVEN_T1 = 3.0
UNEVEN_T2 = (3.0, 4.0, 6.0, 10.0)
POLICIES = ("light", "v2v")


@dataclass(frozen=True)
class ExperimentSuite:
    name: str
    grid: tuple[tuple[str, ScenarioConfig], ...]
    seeds: tuple[int, ...]
    policies: tuple[str, ...] = POLICIES

    def runs(self):
        for label, base in self.grid:
            for policy in self.policies:
                for seed in self.seeds:
                    yield label, replace(base, policy=policy, seed=seed)


def _label(t: float) -> str:
    return f"{t:g}"


def even_suite(seeds, base: ScenarioConfig = ScenarioConfig()) -> ExperimentSuite:
    grid = tuple((f"T{_label(t)}", replace(base, T=(t,) * 4)) for t in EVEN_T)
    return ExperimentSuite("even", grid, tuple(seeds))


def uneven_suite(seeds, base: ScenarioConfig = ScenarioConfig()) -> ExperimentSuite:
    grid = tuple(
        (f"T2_{_label(t2)}", replace(base, T=(UNEVEN_T1, t2, UNEVEN_T1, t2))) for t2 in UNEVEN_T2
    )
    return ExperimentSuite("uneven", grid, tuple(seeds))


def custom_suite(base: ScenarioConfig, seeds, policies=POLICIES) -> ExperimentSuite:
    return ExperimentSuite("custom", (("custom", base),), tuple(seeds), tuple(policies))


def _fmt(x: float, places: int = 4) -> str:
    return f"{x:.{places}f}"


def write_run(result: SimResult, run_dir: Path) -> list[dict]:
    """Write the per-run files and return the summary rows."""
    run_dir.mkdir(parents=True, exist_ok=True)
    records = result.delay_records()

    with open(run_dir / "delays.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "direction", "scheduled_spawn", "exit_time", "delay"])
        for r in records:
            w.writerow([r.id, int(r.direction), _fmt(r.scheduled_spawn), _fmt(r.exit_time),
                        _fmt(r.delay)])

    with open(run_dir / "cdf.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scope", "delay", "cdf"])
        scopes = [("pooled", records)]
        scopes += [(f"dir{d}", [r for r in records if int(r.direction) == d]) for d in range(1, 5)]
        for scope, recs in scopes:
            if not recs:
                continue
            for x, f in cdf(recs).table():
                w.writerow([scope, _fmt(x), _fmt(f, 6)])

    rows = summarize(records)
    non_drained = len(result.non_drained)
    for row in rows:
        row.update(status=result.status, non_drained=non_drained,
                   spawn_window=result.config.spawn_window)
    with open(run_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow(_summary_cells(row))

    with open(run_dir / "events.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "vehicle", "event", "detail"])
        for t, vid, event, detail in result.events():
            w.writerow([_fmt(t), vid, event, detail])

    (run_dir / "manifest.ini").write_text(
        f"# intersim run manifest; status={result.status}\n" + format_scenario(result.config)
    )
    if result.violations:
        with open(run_dir / "violations.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "kind", "vehicle", "other", "value"])
            for v in result.violations:
                w.writerow([_fmt(v.time), v.kind, v.vehicle, v.other, _fmt(v.value)])
    return rows


SUMMARY_COLUMNS = ["scope", "count", "median", "exceed_20s", "mean", "max", "status",
                   "non_drained", "spawn_window"]


def _summary_cells(row: dict) -> list:
    return [row["scope"], row["count"], _fmt(row["median"]), _fmt(row["exceed_20s"], 6),
            _fmt(row["mean"]), _fmt(row["max"]), row["status"], row["non_drained"],
            _fmt(row["spawn_window"], 1)]


def _one(job):
    label, cfg, run_dir, strict = job
    result = run(cfg, strict=strict)
    rows = write_run(result, Path(run_dir))
    return label, cfg.policy, cfg.seed, rows, len(result.violations)


def run_suite(suite: ExperimentSuite, out: str | os.PathLike, jobs: int = 1,
              strict: bool = False) -> list[dict]:
    """Run every grid point x policy x seed; returns the suite summary rows."""
    root = Path(out) / suite.name
    jobs_list = [
        (label, cfg, root / label / cfg.policy / f"seed{cfg.seed}", strict)
        for label, cfg in suite.runs()
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_one, jobs_list))
    else:
        done = [_one(j) for j in jobs_list]

    summary = []
    for label, policy, seed, rows, n_viol in done:
        for row in rows:
            summary.append({"point": label, "policy": policy, "seed": seed,
                            "violations": n_viol, **row})
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "suite_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "policy", "seed", "violations", *SUMMARY_COLUMNS])
        for row in summary:
            w.writerow([row["point"], row["policy"], row["seed"], row["violations"],
                        *_summary_cells(row)])
    LOG.info("suite %s: %d runs written under %s", suite.name, len(done), root)
    return summary

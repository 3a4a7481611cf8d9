"""Command line: ``intersim {run,suite,check}``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 invariant
violation under --strict (or any violation for ``check``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_scenario, with_overrides
from .engine import InvariantViolation, ScenarioConfig, run
from .harness import custom_suite, even_suite, run_suite, uneven_suite, write_run

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _seeds(text: str) -> list[int]:
    try:
        return [int(s, 0) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def _base(args) -> ScenarioConfig:
    cfg = load_scenario(args.config) if args.config else ScenarioConfig()
    return with_overrides(cfg, seed=getattr(args, "seed", None), policy=args.policy)


def _print_summary(rows, out=sys.stdout):
    print(f"{'scope':<8}{'count':>7}{'median':>11}{'>20s':>9}{'mean':>11}{'max':>11}", file=out)
    for r in rows:
        print(f"{r['scope']:<8}{r['count']:>7}{r['median']:>11.2f}{r['exceed_20s']:>9.3f}"
              f"{r['mean']:>11.2f}{r['max']:>11.2f}", file=out)


def cmd_run(args) -> int:
    cfg = _base(args)
    result = run(cfg, strict=args.strict)
    out = Path(args.out) / f"{cfg.policy}-seed{cfg.seed}"
    rows = write_run(result, out)
    print(f"{cfg.policy} T={cfg.T} seed={cfg.seed}: {result.status}, "
          f"{len(result.violations)} violations -> {out}")
    _print_summary(rows)
    return 0


def cmd_suite(args) -> int:
    seeds = args.seeds or [args.seed if args.seed is not None else 0]
    base = load_scenario(args.config) if args.config else ScenarioConfig()
    if args.name == "even":
        suite = even_suite(seeds, base)
    elif args.name == "uneven":
        suite = uneven_suite(seeds, base)
    else:
        policies = [args.policy] if args.policy else ["light", "v2v"]
        suite = custom_suite(base, seeds, policies)
    rows = run_suite(suite, args.out, jobs=args.jobs, strict=args.strict)
    pooled = [r for r in rows if r["scope"] == "pooled"]
    for r in pooled:
        print(f"{r['point']:<8}{r['policy']:<6}seed={r['seed']:<6}median={r['median']:.2f} "
              f"mean={r['mean']:.2f} >20s={r['exceed_20s']:.3f} n={r['count']} {r['status']}")
    return 0


def cmd_check(args) -> int:
    cfg = _base(args)
    result = run(cfg, strict=True)
    print(f"{cfg.policy} T={cfg.T} seed={cfg.seed}: {result.status}, 0 violations, "
          f"{len(result.delay_records())} vehicles")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file (key = value)")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="override the scenario seed")
    common.add_argument("--policy", choices=("light", "v2v"), help="override the policy")
    common.add_argument("--out", default="results", metavar="DIR", help="output directory")
    common.add_argument("--strict", action="store_true", help="abort on the first invariant violation")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="intersim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one scenario").set_defaults(func=cmd_run)
    p = sub.add_parser("suite", parents=[common], help="run a named experiment suite")
    p.add_argument("name", choices=("even", "uneven", "custom"))
    p.add_argument("--seeds", type=_seeds, help="comma-separated seeds, e.g. 0,1,2,3,4")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_suite)
    sub.add_parser("check", parents=[common], help="strict invariant-only run").set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``adiabatic {run,sweep,check,figure}``.

The worker count for sweeps and figures is read from ``ADIABATIC_WORKERS``
(default 1).  Exit status is 0 only when no invariant was violated.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import AdiabaticError, ConfigError
from .runner import ExperimentConfig, SweepFailure, run_experiment, sweep

WORKERS_ENV = "ADIABATIC_WORKERS"


def workers_from_env() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(WORKERS_ENV, f"expected a positive integer, got {raw!r}")
    return n


def _load(path: Path, seed: int | None) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(path)
    return cfg.with_seed(seed) if seed is not None else cfg


def _summary(label: str, table) -> str:
    m = table.metadata
    kinds = ",".join(m["violation_kinds"]) or "none"
    return (f"{label}: {m['n_rows']} rows, {m['n_violation_rows']} rows with violations ({kinds}), "
            f"max norm drift {m['norm_drift_max']:.2e}")


def cmd_run(args) -> int:
    cfg = _load(Path(args.config), args.seed)
    table = run_experiment(cfg)
    prefix = Path(args.out) if args.out else Path("results") / (cfg.name or Path(args.config).stem)
    csv_path, meta_path = table.write(prefix)
    print(_summary(str(args.config), table))
    print(f"wrote {csv_path} and {meta_path}")
    return 0 if table.n_violations == 0 else 1


def cmd_sweep(args) -> int:
    cfg_dir = Path(args.config_dir)
    paths = sorted(cfg_dir.glob("*.json"))
    if not paths:
        print(f"no *.json configs in {cfg_dir}", file=sys.stderr)
        return 2
    cfgs = []
    for p in paths:
        cfgs.append(_load(p, args.seed))
    out_dir = Path(args.out) if args.out else Path("results") / cfg_dir.name
    results = sweep(cfgs, workers_from_env())
    status = 0
    for p, res in zip(paths, results):
        if isinstance(res, SweepFailure):
            print(f"{p}: FAILED {res.error}")
            status = 1
            continue
        res.write(out_dir / p.stem)
        print(_summary(str(p), res))
        if res.n_violations:
            status = 1
    return status


def cmd_check(args) -> int:
    from .checks import run_checks

    lines = run_checks(quick=args.quick, seed=args.seed or 0, workers=workers_from_env())
    for line in lines:
        print(line)
    return 0 if all(line.passed for line in lines) else 1


def cmd_figure(args) -> int:
    from .figures import build_figure

    fig = build_figure(args.number, workers=workers_from_env())
    csv_path, meta_path = fig.write(args.out)
    print(f"figure {args.number}: {len(fig.rows)} rows, {fig.n_violations} rows with violations")
    print(f"wrote {csv_path} and {meta_path}")
    return 0 if fig.n_violations == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adiabatic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one JSON experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="output prefix (writes PREFIX.csv and PREFIX.json)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every *.json config in a directory")
    p.add_argument("config_dir")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="override every config seed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="smaller sizes and grids")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("figure", help="emit plot data for a figure")
    p.add_argument("number", type=int, choices=[2, 3, 4, 5, 6, 7])
    p.add_argument("--out", default="results/figures", help="output directory")
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AdiabaticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

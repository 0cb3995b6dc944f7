"""Command-line entry point: run, compare and metrics subcommands.

Exit codes: 0 ok, 1 configuration error, 2 simulation/observer divergence, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict
from pathlib import Path

from .config import CONTROLLERS, OBSERVERS, ConfigError, RunConfig, load_config
from .observers import ObserverDiverged
from .runner import Comparison, RunResult, box_summary, compare, read_trace, run_scenario, summarize_rows
from .simcore import DomainError, SimulationDiverged

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def _save_run(result: RunResult, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    path.write_text(result.csv_text())
    return path


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output_dir)
    result = run_scenario(cfg)
    if args.seed_check:
        again = run_scenario(cfg)
        if again.csv_text() != result.csv_text():
            print("seed-check: traces differ between identical runs", file=sys.stderr)
            return EXIT_DIVERGED
        print("seed-check: traces are bit-identical")
    path = _save_run(result, out)
    comp = Comparison([result])
    _write_csv(out / "summary.csv", comp.summary_rows())
    print(comp.table())
    if result.events:
        print(f"envelope violations: {len(result.events)} (first at t={result.events[0].t:.4f})")
    print(f"trace written to {path}")
    return EXIT_OK


def _split(text: str, allowed: tuple[str, ...], what: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in allowed]
    if bad or not items:
        raise ConfigError(f"--{what}: expected a comma list from {allowed}, got {text!r}")
    return items


def variants(base: RunConfig, controllers: list[str], observers: list[str]) -> list[RunConfig]:
    """PPC runs once per observer; the baselines run without an observer."""
    cfgs = []
    for c in controllers:
        if c == "ppc":
            cfgs.extend(base.with_(controller=c, observer=o, name=f"ppc-{o}") for o in observers)
        else:
            cfgs.append(base.with_(controller=c, observer="none", name=c))
    for c in cfgs:
        c.check_envelope()
    return cfgs


def cmd_compare(args) -> int:
    base = load_config(args.config)
    cfgs = variants(
        base,
        _split(args.controllers, CONTROLLERS, "controllers"),
        _split(args.observers, OBSERVERS, "observers"),
    )
    out = Path(args.out or base.output_dir)
    comp = compare(cfgs, workers=args.workers)
    for r in comp.results:
        _save_run(r, out / r.config.label)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "summary.csv", comp.summary_rows())
    _write_csv(out / "observers.csv", comp.observer_rows())
    _write_csv(out / "boxplot.csv", [
        {"method": r.config.label, "axis": axis, **asdict(b), "quantile_method": "linear (type 7)"}
        for r in comp.results for axis, b in box_summary(r).items()
    ])
    print(comp.table())
    return EXIT_OK


def cmd_metrics(args) -> int:
    rows = read_trace(args.trace)
    if not rows:
        raise ConfigError(f"{args.trace}: trace has no samples")
    s = summarize_rows(rows, args.skip)
    print(f"{'axis':<5} {'RMS':>10} {'MAX':>10} {'MEAN':>10} {'n':>7}")
    for axis in ("x", "y"):
        e = s[axis]
        print(f"{axis:<5} {e.rms:10.6f} {e.max_abs:10.6f} {e.mean_abs:10.6f} {e.n:7d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppcdob", description="Unicycle tracking simulations with disturbance observers.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configured simulation")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default: output.dir from the config)")
    r.add_argument("--seed-check", action="store_true", help="run twice and verify bit-identical traces")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several controller/observer variants on one scenario")
    c.add_argument("--config", required=True)
    c.add_argument("--controllers", default="ppc,smc,pid")
    c.add_argument("--observers", default="asmdob,eso")
    c.add_argument("--out")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    m = sub.add_parser("metrics", help="summarize the tracking error of a saved trace")
    m.add_argument("--trace", required=True)
    m.add_argument("--skip", type=float, default=0.0, help="ignore samples before this time [s]")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDiverged, ObserverDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run the experiment presets t0..t6 and print a closed-loop cost table.

Each preset writes ``<preset>_trajectory.csv`` (or ``t0_open_loop.csv``),
``<preset>_audit.txt`` and ``<preset>_config.txt`` into ``--out``.

    python scripts/run_experiments.py --out results
    python scripts/run_experiments.py --presets t2 t6 --steps 100
"""

import argparse
import sys
from pathlib import Path

from mbmpc.cli import main as cli_main
from mbmpc.config import PRESETS
from mbmpc.controller import TrajectoryLog, lyapunov_audit


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--presets", nargs="+", default=sorted(PRESETS), choices=sorted(PRESETS))
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    out = Path(args.out)
    worst = 0
    rows = []
    for name in args.presets:
        cmd = ["simulate", "--preset", name, "--out", str(out)]
        if args.steps is not None:
            cmd += ["--steps", str(args.steps)]
        for kv in args.set:
            cmd += ["--set", kv]
        print(f"== {name}")
        rc = cli_main(cmd)
        worst = max(worst, rc)
        path = out / f"{name}_trajectory.csv"
        if path.exists() and rc != 2:
            log = TrajectoryLog.from_csv(path)
            fb = sum(r.fallback for r in log.records)
            rows.append((name, log.closed_loop_cost, fb, len(log.records), lyapunov_audit(log).passed))
    if rows:
        print("\npreset  closed-loop cost  fallback  audit")
        for name, J, fb, n, ok in rows:
            print(f"{name:6s}  {J:16.6f}  {fb:4d}/{n:<4d} {'PASS' if ok else 'FLAGGED'}")
    return worst


if __name__ == "__main__":
    sys.exit(main())

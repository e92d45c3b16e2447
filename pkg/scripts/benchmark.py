#!/usr/bin/env python3
"""Cold-start solve-time benchmark at n = 0 for M in {2, 16, 80}, offset on and off.

Thin wrapper over ``mbmpc benchmark``; times are hardware dependent, only
their ordering is meaningful.

    python scripts/benchmark.py --repetitions 100 --out results
"""

import argparse
import sys

from mbmpc.cli import main as cli_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repetitions", type=int, default=100)
    ap.add_argument("--out", default="results")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args(argv)
    cmd = ["benchmark", "--repetitions", str(args.repetitions), "--out", args.out]
    for kv in args.set:
        cmd += ["--set", kv]
    return cli_main(cmd)


if __name__ == "__main__":
    sys.exit(main())

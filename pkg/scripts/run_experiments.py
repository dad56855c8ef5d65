#!/usr/bin/env python3
"""Run every committed experiment config through the CLI.

Usage: python scripts/run_experiments.py [--out-root OUT] [--only NAME ...]

Each config in scripts/configs/ maps to one experiment; outputs land in
OUT/<config-stem>/.  Exits nonzero if any experiment reports a check failure.
The stationarity runs dominate the total wall time (a few minutes).
"""

import argparse
import sys
import time
from pathlib import Path

from relgeneric.cli import main as cli_main

CONFIGS = Path(__file__).resolve().parent / "configs"


def experiment_of(path: Path) -> str:
    for line in path.read_text().splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped.startswith("experiment"):
            return stripped.split("=", 1)[1].strip()
    raise SystemExit(f"{path}: missing 'experiment =' line")


def run():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-root", default="out")
    parser.add_argument("--only", nargs="*", default=None,
                        help="config stems to run (default: all)")
    args = parser.parse_args()

    failures = []
    for cfg in sorted(CONFIGS.glob("*.cfg")):
        if args.only and cfg.stem not in args.only:
            continue
        out = Path(args.out_root) / cfg.stem
        print(f"== {cfg.stem} ({experiment_of(cfg)}) -> {out}")
        t0 = time.time()
        code = cli_main([experiment_of(cfg), "--config", str(cfg), "--out", str(out)])
        print(f"   exit {code} in {time.time() - t0:.1f}s")
        if code != 0:
            failures.append(cfg.stem)
    if failures:
        print(f"failed experiments: {', '.join(failures)}")
        return 1
    print("all experiments passed")
    return 0


if __name__ == "__main__":
    sys.exit(run())

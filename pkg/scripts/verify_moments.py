"""Closed-form moments against Monte Carlo over a small (M, N, K) grid.

Thin wrapper around ``irsop verify``; writes a CSV with one row per formula
and instance. The default 10^7 trials take a few minutes.

    python scripts/verify_moments.py [--trials 1000000] [--csv results/verify.csv]
"""
import sys
from pathlib import Path

from irsop.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--csv" not in argv:
        Path("results").mkdir(exist_ok=True)
        argv += ["--csv", "results/verify.csv"]
    sys.exit(main(["verify", *argv]))

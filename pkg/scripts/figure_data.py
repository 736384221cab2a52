"""Dump wavefunction, kernel and spectrum tables for plotting."""
from __future__ import annotations

import argparse
import sys

from thermal_wavepackets.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="out/figures")
    args = ap.parse_args()

    common = ["--out", args.out] + (["--config", args.config] if args.config else [])
    worst = 0
    for verb in ("wavefunction", "kernel", "spectrum"):
        code = cli([verb, *common])
        print(f"[figure_data] {verb}: exit {code}")
        worst = max(worst, code)
    sys.exit(worst)


if __name__ == "__main__":
    main()

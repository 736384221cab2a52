"""Run the T, x and M sweeps on one configuration and print a compact table."""
from __future__ import annotations

import argparse
import csv
from dataclasses import replace
from pathlib import Path

from thermal_wavepackets.cli import cmd_sweep
from thermal_wavepackets.config import load_config

SWEEPS = {
    "T": (0.25, 0.5, 1.0, 2.0, 4.0),
    "x": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    "M": (16, 32, 64, 128),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="out/sweeps")
    ap.add_argument("--parallel", action="store_true")
    args = ap.parse_args()

    base = load_config(args.config)
    for param, values in SWEEPS.items():
        cfg = replace(base, sweep_param=param, sweep_values=values, out=args.out).validate()
        code, _ = cmd_sweep(cfg, args.parallel)
        path = Path(args.out) / f"sweep_{param}.csv"
        print(f"== sweep {param} (exit {code}) -> {path}")
        with path.open() as fh:
            for row in csv.DictReader(fh):
                print(
                    f"  {param}={float(row[param]):<6g} split={float(row['split_error']):.2e}"
                    f" bound={float(row['aliasing_bound']):.2e} rt={float(row['rt_error']):.1e}"
                    f" dkdx={float(row['uncertainty_product']):.6f} regime_ok={row['regime_ok']}"
                )


if __name__ == "__main__":
    main()

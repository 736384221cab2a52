"""Split-identity error against the Poisson aliasing bound, over box size and x.

The grid spacing is held at L/M = 10/64 while L grows, so only the IR wrap changes.
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

from thermal_wavepackets import build_lattice
from thermal_wavepackets.thermal import TemperatureSplit, split_aliasing_bound, split_errors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--L", type=float, nargs="+", default=[8, 10, 12, 14, 16, 20])
    ap.add_argument("--x", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75, 0.9])
    ap.add_argument("--out", default="out/split_aliasing.csv")
    args = ap.parse_args()

    rows = []
    for L in args.L:
        M = 2 * round(6.4 * L / 2)
        lat = build_lattice(1, L, M)
        for x in args.x:
            split = TemperatureSplit(args.T, x)
            err = float(split_errors(lat, split).max())
            bound = split_aliasing_bound(lat, split)
            rows.append((L, M, x, err, bound))
            ratio = f"{err / bound:.4f}" if bound > 0 else "-"  # bound underflows on large boxes
            print(f"L={L:5.1f} M={M:4d} x={x:.2f}  error={err:.3e}  bound={bound:.3e}  ratio={ratio}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["L", "M", "x", "split_error", "aliasing_bound"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()

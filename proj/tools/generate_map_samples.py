#!/usr/bin/env python3
"""Synthetic compressor-map samples for the bundled example map.

Each guide-vane isoline runs from a surge point (c_s, Y_s) to a choke flow c_ch with
Y = Y_s * (1 - 0.15 s - 0.5 s**2.2), s = (c - c_s) / (c_ch - c_s).
Output columns: r_gv, c2 [m/s], work [J/kg]. Feed to `ccomp fit-map`.
"""

import argparse
import csv
import sys

import numpy as np


def isoline(r, n):
    c_s = 22.0 + 22.0 * r
    c_ch = 70.0 + 45.0 * r
    y_s = 11000.0 + 13000.0 * r
    c = np.linspace(c_s, c_ch, n)
    s = (c - c_s) / (c_ch - c_s)
    return c, y_s * (1.0 - 0.15 * s - 0.5 * s**2.2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--output", default="-")
    ap.add_argument("--points", type=int, default=40, help="samples per isoline")
    ap.add_argument("--isolines", type=int, default=6)
    args = ap.parse_args()

    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["r_gv", "c2", "work"])
    for r in np.linspace(0.0, 1.0, args.isolines):
        for c, y in zip(*isoline(r, args.points)):
            w.writerow([repr(float(r)), repr(float(c)), repr(float(y))])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()

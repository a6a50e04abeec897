#!/usr/bin/env python3
"""Sweep operator conditioning over grid orders and emit CSV + gnuplot files.

Usage: python3 scripts/run_conditioning.py [OUTDIR] [--kkt]
"""

import sys

from birktraj import cond_study, loglog_slope, write_cond_csv, write_cond_gnuplot

ORDERS = [8, 16, 32, 64, 128, 256, 512]


def main(argv):
    out = argv[1] if len(argv) > 1 and not argv[1].startswith("-") else "results"
    include_kkt = "--kkt" in argv
    import os

    os.makedirs(out, exist_ok=True)
    for kind in ("lgl", "cgl"):
        rows = cond_study(kind, ORDERS, include_kkt=include_kkt)
        csv = os.path.join(out, f"conditioning_{kind}.csv")
        write_cond_csv(rows, csv)
        write_cond_gnuplot(csv, os.path.join(out, f"conditioning_{kind}.gp"))
        orders = [r.N for r in rows]
        print(
            f"{kind}: slope(B_a core) = "
            f"{loglog_slope(orders, [r.cond_B_a for r in rows]):+.4f}, "
            f"slope(D) = {loglog_slope(orders, [r.cond_D for r in rows]):+.4f}"
            f"  -> {csv}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

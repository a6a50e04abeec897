#!/usr/bin/env python3
"""Error-decay study on the nonlinear registry problem, Lobatto vs uniform.

The reference is an indirect (optimality-system root-finding) solve at N=64.
Usage: python3 scripts/run_convergence.py [OUTDIR]
"""

import os
import sys

from birktraj import (
    convergence_study,
    write_convergence_csv,
    write_convergence_gnuplot,
)


def main(argv):
    out = argv[1] if len(argv) > 1 else "results"
    os.makedirs(out, exist_ok=True)
    rows = []
    for kind in ("lgl", "cgl", "uniform"):
        rows += convergence_study(
            "nonlinear-scalar", "a", kind, [4, 8, 16, 32], oracle_order=64
        )
    csv = os.path.join(out, "convergence_nonlinear.csv")
    write_convergence_csv(rows, csv)
    write_convergence_gnuplot(csv, os.path.join(out, "convergence_nonlinear.gp"))
    for r in sorted(rows, key=lambda r: (r.kind, r.N)):
        err = f"{r.state_error:.3e}" if r.converged else f"({r.note})"
        print(f"{r.kind:8s} N={r.N:3d}  state error {err}")
    print(f"-> {csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

#!/usr/bin/env python3
"""Solve every registry problem, map its multipliers to costates, and verify.

Usage: python3 scripts/solve_registry.py [N]
"""

import sys

from birktraj import (
    PrimalForm,
    build_birkhoff,
    default_tolerance,
    extract_primal,
    make_grid,
    map_covectors,
    prepared,
    registry,
    registry_names,
    solve_with_fallback,
    transcribe,
    verified_variant,
    verify_pontryagin,
)


def main(argv):
    N = int(argv[1]) if len(argv) > 1 else 16
    form = PrimalForm("a")
    failures = 0
    for name in registry_names():
        ocp = prepared(registry(name))
        system = build_birkhoff(make_grid("lgl", N, ocp.horizon))
        nlp = transcribe(ocp, system, form)
        res = solve_with_fallback(nlp)
        if not res.converged:
            print(f"{name:28s} SOLVE FAILED ({res.status.value})")
            failures += 1
            continue
        primal = extract_primal(nlp, res.z)
        dual = map_covectors(res, form, system)
        report = verify_pontryagin(
            ocp, primal, dual, system, verified_variant(form),
            tol=default_tolerance(system),
        )
        block, worst = report.worst_block()
        state = "ok" if report.passed else "VERIFY FAILED"
        print(
            f"{name:28s} objective {primal.objective: .9g}  "
            f"worst {block} {worst:.2e}  {state}"
        )
        failures += 0 if report.passed else 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

#!/usr/bin/env python3
"""Phase-transition sweeps for the built-in operator family.

Runs the desk-scale robust-PCA sweep for each requested operator and
writes one CSV per operator plus a side-by-side summary. The default
grid finishes in tens of minutes on a laptop core; --full switches to a
denser grid (hours, use --jobs).
"""

import argparse
import os
import sys

import numpy as np

from mnn.experiments import (
    DESK_MC_RATIO_VALUES,
    DESK_R_VALUES,
    DESK_RPCA_RATIO_VALUES,
    monotone_row_fraction,
    run_phase_diagram,
    write_phase_csv,
)
from mnn.operators import builtin_kernel
from mnn.solvers import SolverConfig

# Full-size grid: 50x50 planes, 100 bands, 50x50 cells. Hours of compute;
# the desk grid is the default for a reason.
FULL_R_VALUES = tuple(range(1, 51))
FULL_RPCA_RATIO_VALUES = tuple(round(0.01 * k, 2) for k in range(1, 51))
FULL_MC_RATIO_VALUES = tuple(round(0.02 * k, 2) for k in range(1, 50))
FULL_DIMS = {"h": 50, "w": 50, "b": 100}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--task", choices=("rpca", "mc"), default="rpca")
    ap.add_argument(
        "--operators",
        default="identity,diff_row,sobel",
        help="comma-separated built-in kernel names",
    )
    ap.add_argument("--norm", default="l1", choices=("l1", "l2", "none"))
    ap.add_argument("--c", type=int, default=10, help="regions per factor plane")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--full", action="store_true", help="dense grid (slow)")
    ap.add_argument("--out", default="phase_out", help="output directory")
    args = ap.parse_args()

    if args.full:
        r_values = FULL_R_VALUES
        ratios = FULL_RPCA_RATIO_VALUES if args.task == "rpca" else FULL_MC_RATIO_VALUES
        dims = FULL_DIMS
    else:
        r_values = DESK_R_VALUES
        ratios = DESK_RPCA_RATIO_VALUES if args.task == "rpca" else DESK_MC_RATIO_VALUES
        dims = {}
    cfg = SolverConfig(rel_tol=1e-6, max_iters=2000)
    os.makedirs(args.out, exist_ok=True)

    totals = {}
    for name in args.operators.split(","):
        name = name.strip()
        grid = run_phase_diagram(
            args.task,
            builtin_kernel(name),
            r_values,
            ratios,
            c=args.c,
            trials=args.trials,
            seed=args.seed,
            cfg=cfg,
            norm=args.norm,
            jobs=args.jobs,
            **dims,
        )
        path = os.path.join(args.out, f"phase_{args.task}_{name}.csv")
        write_phase_csv(grid, path)
        g = grid.success_rate
        totals[name] = g.sum() * args.trials
        print(f"{name}: wrote {path}")
        print(f"  successes {totals[name]:.0f}/{g.size * args.trials}"
              f"  monotone rows {monotone_row_fraction(g):.2f}")
        for i, r in enumerate(r_values):
            print(f"  r={r:2d} " + " ".join(f"{v:4.1f}" for v in g[i]))

    ranked = sorted(totals, key=totals.get, reverse=True)
    print("ranking: " + " >= ".join(ranked))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Calibrate the default Lepski constant M'.

Standard normal, n2 = 50,000 selection-sample points, BL(2), 200 seeded reps.
For each M' on a ladder, report how often j_hat lands in [j_min, j_min + 2].
The default is the smallest ladder value reaching TARGET, so the selector
stays as fine as the concentration requirement allows.

    python3 scripts/calibrate_mprime.py [--reps 200] [--seed 0]
"""

from __future__ import annotations

import argparse
import json
import logging

import numpy as np

from confband.band import LepskiConfig, lepski_select
from confband.estimator import resolution_grid
from confband.rng import rep_generator
from confband.splines import KernelSpec

LADDER = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)
TARGET = 0.95
N2 = 50_000


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.disable(logging.WARNING)

    spec = KernelSpec.battle_lemarie(2)
    grid = resolution_grid(N2, spec.r)
    samples = [rep_generator(args.seed, i).standard_normal(N2) for i in range(args.reps)]
    rows = []
    for m in LADDER:
        cfg = LepskiConfig(M_prime=m)
        picks = np.array([lepski_select(spec, s, grid, cfg) for s in samples])
        hist = {int(j): int(np.sum(picks == j)) for j in grid.levels}
        share = float(np.mean(picks <= grid.j_min + 2))
        rows.append({"M_prime": m, "share_in_window": share, "histogram": hist})
        print(json.dumps(rows[-1]), flush=True)
    chosen = next((r["M_prime"] for r in rows if r["share_in_window"] >= TARGET), None)
    print(json.dumps({"grid": [grid.j_min, grid.j_max], "target": TARGET, "chosen_M_prime": chosen}))


if __name__ == "__main__":
    main()

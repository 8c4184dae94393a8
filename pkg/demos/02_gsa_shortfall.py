"""Shortfall probability of the GSA over (w, phi) for three consumption targets.

Writes one CSV per target to the output directory (default ``out/``) in the
grid.csv layout, ready for external plotting.

Run:  python3 demos/02_gsa_shortfall.py [outdir] [points]
"""

import sys
from pathlib import Path

import numpy as np

from decumulate.config import write_grid_csv
from decumulate.lifetimes import sample_lambdas
from decumulate.optimizer import GridSpec, evaluate_surfaces
from decumulate.params import ModelParams

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
n = int(sys.argv[2]) if len(sys.argv) > 2 else 50
out.mkdir(parents=True, exist_ok=True)
nu = 0.2

for c in (0.04, 0.052, 0.082):
    params = ModelParams(c=c)
    lambdas = sample_lambdas(params.mortality, 200, 20240601)
    s = evaluate_surfaces("GSA", params, GridSpec(n, 1.25, n, c), nu, lambdas)
    write_grid_csv(s, out / f"gsa_shortfall_c{c:.3f}.csv")

    drawdown = s.shortfall_prob[:, [0]]
    better = (s.shortfall_prob[:, 1:] < drawdown) & s.admissible[:, 1:]
    rising = np.all(np.diff(s.shortfall_prob, axis=1) >= 0, axis=1)
    print(f"c={c:.3f}: drawdown shortfall prob ranges {drawdown.min():.3f}..{drawdown.max():.3f}")
    if better.any():
        i = np.flatnonzero(better.any(axis=1))
        print(f"   a GSA stream beats drawdown for w in [{s.w[i[0]]:.2f}, {s.w[i[-1]]:.2f}]")
    else:
        print("   no GSA stream beats drawdown at any w")
    print(f"   probability rises with phi at {int(rising.sum())} of {n} weights")
print(f"CSV files in {out}/")

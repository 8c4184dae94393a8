"""Decision map of the optimal vehicle over investment risk aversion and liquidity tolerance.

Writes ``map_nu<threshold>.csv`` and a PNG heatmap for nu = 0 and nu = 0.2 at
the Bengen 4% target.  Grid sizes default to desk scale (200 x 200 strategies,
20 x 20 appetites); pass smaller numbers for a quick look.

Run:  python3 demos/03_decision_map.py [outdir] [strategy_points] [appetite_points]
"""

import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from decumulate.config import write_map_csv
from decumulate.heatmap import render_map
from decumulate.lifetimes import sample_lambdas
from decumulate.optimizer import GridSpec, evaluate_all, sweep_appetites
from decumulate.params import ModelParams

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
n = int(sys.argv[2]) if len(sys.argv) > 2 else 200
k = int(sys.argv[3]) if len(sys.argv) > 3 else 20
out.mkdir(parents=True, exist_ok=True)

c = 0.04
params = ModelParams(c=c)
lambdas = sample_lambdas(params.mortality, 200, 20240601)
grid = GridSpec(n, 1.25, n, c)
b_grid, psi_grid = np.linspace(0.5, 20, k), np.linspace(0.05, 0.5, k)

for nu in (0.0, 0.2):
    t0 = time.perf_counter()
    surfaces = evaluate_all(params, grid, nu, lambdas)
    dmap = sweep_appetites(surfaces, b_grid, psi_grid)
    write_map_csv(dmap, out / f"map_nu{nu:.1f}.csv")
    render_map(dmap, out / f"map_nu{nu:.1f}.png", title=f"c={c}, nu={nu}")
    counts = Counter(dmap.labels().ravel())
    print(f"nu={nu}: {dict(sorted(counts.items()))}  ({time.perf_counter() - t0:.1f}s)")
    print("   low b row:  ", " ".join(dmap.labels()[0]))
    print("   high b row: ", " ".join(dmap.labels()[-1]))

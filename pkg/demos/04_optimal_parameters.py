"""Optimal (w, phi) as investment risk aversion rises, and the implied wealth split.

Liquidity tolerance is held at psi = 0.2 with a 20% shortfall threshold.  The
table shows how the retiree moves from market exposure to guaranteed income.

Run:  python3 demos/04_optimal_parameters.py [outdir] [strategy_points]
"""

import csv
import sys
from pathlib import Path

import numpy as np

from decumulate.lifetimes import sample_lambdas
from decumulate.optimizer import GridSpec, RiskAppetite, evaluate_all, find_optimum, optimum_pricing, wealth_allocation
from decumulate.params import ModelParams

out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
n = int(sys.argv[2]) if len(sys.argv) > 2 else 100
out.mkdir(parents=True, exist_ok=True)
W0 = 595_000

for c, name in ((0.04, "bengen"), (0.052, "modest")):
    params = ModelParams(c=c)
    lambdas = sample_lambdas(params.mortality, 200, 20240601)
    surfaces = evaluate_all(params, GridSpec(n, 1.25, n, c), 0.2, lambdas)
    rows = []
    print(f"\nc={c} ({name})")
    print("     b  label        w      phi   pool$    market$  riskfree$")
    for b in np.linspace(0.5, 20, 14):
        opt = find_optimum(surfaces, RiskAppetite(b, 0.2, 0.2))
        if not opt.feasible:
            print(f"{b:6.2f}  infeasible")
            continue
        alloc = wealth_allocation(opt, optimum_pricing(opt, params, lambdas))
        rows.append((b, opt.label, opt.w, opt.phi, alloc.pool_premium, alloc.market, alloc.risk_free))
        flag = " (short risk-free)" if alloc.leveraged else ""
        print(f"{b:6.2f}  {opt.label:9s} {opt.w:6.3f}  {opt.phi:6.4f}  {alloc.pool_premium * W0:8.0f} "
              f"{alloc.market * W0:9.0f} {alloc.risk_free * W0:9.0f}{flag}")
    with open(out / f"optimal_{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["b", "label", "w", "phi", "pool_premium", "market", "risk_free"])
        w.writerows(rows)

"""Walk through the calibrated market, the loading factors and the consumption targets.

Run:  python3 demos/01_pricing_walkthrough.py
"""

from decumulate.annuity import LoadingPolicy, Strategy, VarianceBasis, Vehicle, loading, price
from decumulate.config import AreInput, consumption_rate, weighted_expenditure
from decumulate.lifetimes import MortalityParams, inverse_hazard_variance, sample_lambdas
from decumulate.market import MarketParams, annuity_epv, perpetuity_law, portfolio_law, weight_bounds

market = MarketParams()
mort = MortalityParams()
lam = mort.lam

print("Real drift and variance of the drawdown account")
for w in (0.0, 0.5, 1.0, 1.25):
    law = portfolio_law(market, w)
    plaw = perpetuity_law(law, lam)
    alpha = "inf" if plaw.degenerate else f"{plaw.alpha:7.2f}"
    print(f"  w={w:4.2f}  mu={law.mu:.4f}  sigma^2={law.sigma2:.6f}  a_x={annuity_epv(law, lam):7.3f}  alpha={alpha}")

w0, w1 = weight_bounds(market, lam)
print(f"\nThe annuity EPV is smallest at w0={w0:.4f}; the bequest variance is finite below w1={w1:.4f}.")

lambdas = sample_lambdas(mort, 200, 20240601)
print(f"\nLongevity uncertainty: Var(1/Lambda) = {inverse_hazard_variance(mort):.3f} years^2")

print("\nLoading factors (S=0.2, n=5000), per variance basis")
for v in (Vehicle.ULA, Vehicle.IIA):
    for basis in VarianceBasis:
        theta = loading(Strategy(v, 0.5, 1.0), market, lam, LoadingPolicy(variance_basis=basis), lambdas)
        print(f"  {v.value}  w=0.5  {basis.value:15s} theta={theta:.4f}")

print("\nWhat does a 4% real income stream cost up front?")
for v in Vehicle:
    pr = price(Strategy(v, 0.5, 0.04), market, lam, LoadingPolicy(), lambdas)
    print(f"  {v.value}: fair {pr.p0:.4f}, loaded {pr.p_theta:.4f}, admissible={pr.admissible}")

print("\nConsumption targets from the ASFA retirement standards")
for name, a in (("modest", AreInput(31867, 29561, 595000)), ("comfortable", AreInput(50207, 46788, 595000))):
    print(f"  {name:12s} ARE*={weighted_expenditure(a):9.1f}  c={consumption_rate(a):.4f}")

"""Command-line entry point.

Exit codes: 0 success, 2 malformed input (CSV, JSON config, arguments),
3 when an oracle z-score exceeds the gate.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import annuity, lifetimes
from .annuity import VEHICLE_ORDER, Strategy, VarianceBasis, Vehicle
from .config import ConfigError, RunConfig, load_config, write_grid_csv, write_map_csv, write_oracle_csv, fmt
from .market import weight_bounds
from .optimizer import RiskAppetite, evaluate_all, evaluate_surfaces, find_optimum, optimum_pricing, \
    sweep_appetites, wealth_allocation
from .oracle import SimConfig, compare_strategy, random_strategies

EXIT_INPUT = 2
EXIT_GATE = 3


def _kv(out, **items):
    for k, v in items.items():
        out.write(f"{k}={v if isinstance(v, str) else fmt(v)}\n")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "threads", None):
        cfg = cfg.replace(threads=args.threads)
    return cfg


def cmd_calibrate(args, out):
    table = lifetimes.read_life_table(args.life_table)
    e = lifetimes.life_expectancy(table, args.factors)
    lam = lifetimes.fit_lambda(e)
    _kv(out, life_expectancy=e, **{"lambda": lam})
    if args.care_table:
        t, p = lifetimes.read_care_table(args.care_table)
        lam_eln, r2 = lifetimes.fit_eln_hazard(t, p)
        _kv(out, lambda_eln=lam_eln, r_squared=r2)
    m = lifetimes.MortalityParams(lam=lam, lambda_floor=args.lambda_floor, sigma_hat=args.sigma_hat)
    _kv(out, sigma_hat=m.sigma_hat, var_inverse_lambda=lifetimes.inverse_hazard_variance(m, seed=args.seed))
    return 0


def cmd_price(args, out):
    cfg = _config(args)
    p = cfg.model
    s = Strategy(args.vehicle, args.w, args.phi, args.beta)
    lambdas = cfg.lambdas()
    res = annuity.price(s, p.market, p.lam, p.loading, lambdas)
    _kv(out, vehicle=s.vehicle.value, w=s.w, phi=s.phi, beta=s.beta, p0=res.p0, theta=res.theta,
        p_theta=res.p_theta, hedge_injection=res.hedge_injection, outlay=res.outlay,
        admissible=res.admissible)
    # the unhedged loading on both variance bases, for reference
    for basis in VarianceBasis:
        pol = dataclasses.replace(p.loading, variance_basis=basis)
        theta = annuity.loading(Strategy(s.vehicle, s.w, 1.0), p.market, p.lam, pol, lambdas)
        _kv(out, **{f"theta0_{basis.value}": theta})
    return 0


def cmd_evaluate(args, out):
    cfg = _config(args)
    nu = args.nu if args.nu is not None else cfg.plan.nu
    vehicles = [args.vehicle] if args.vehicle else VEHICLE_ORDER
    surf = [evaluate_surfaces(v, cfg.model, cfg.grid_spec, nu, cfg.lambdas(), cfg.plan.beta, cfg.threads)
            for v in vehicles]
    text = write_grid_csv(surf, args.out)
    if args.out is None:
        out.write(text)
    return 0


def cmd_optimize(args, out):
    cfg = _config(args)
    nu = args.nu if args.nu is not None else cfg.plan.nu
    lambdas = cfg.lambdas()
    surf = evaluate_all(cfg.model, cfg.grid_spec, nu, lambdas, cfg.plan.beta, cfg.threads)
    opt = find_optimum(surf, RiskAppetite(args.b, args.psi, nu))
    _kv(out, label=opt.label, feasible=opt.feasible)
    if not opt.feasible:
        return 0
    _kv(out, vehicle=opt.vehicle.value, w=opt.w, phi=opt.phi, q_star=opt.q_star, mean=opt.mean,
        second_moment=opt.second_moment, shortfall_prob=opt.shortfall_prob)
    alloc = wealth_allocation(opt, optimum_pricing(opt, cfg.model, lambdas, cfg.plan.beta))
    _kv(out, pool_premium=alloc.pool_premium, market=alloc.market, risk_free=alloc.risk_free,
        leveraged=alloc.leveraged)
    return 0


def cmd_sweep(args, out):
    cfg = _config(args)
    nu = args.nu if args.nu is not None else cfg.plan.nu
    surf = evaluate_all(cfg.model, cfg.grid_spec, nu, cfg.lambdas(), cfg.plan.beta, cfg.threads)
    dmap = sweep_appetites(surf, cfg.appetite.b_grid, cfg.appetite.psi_grid, cfg.threads)
    write_map_csv(dmap, args.out)
    if args.png:
        from .heatmap import render_map

        render_map(dmap, args.png, title=f"c={cfg.plan.c:g}, nu={nu:g}")
    return 0


def cmd_oracle(args, out):
    cfg = _config(args)
    nu = args.nu if args.nu is not None else cfg.plan.nu
    p = cfg.model
    lambdas = cfg.lambdas()
    # the closed-form probability averages over a much larger hazard sample than the
    # optimizer's, so the comparison measures simulation error only
    big = lifetimes.sample_lambdas(p.mortality, args.closed_form_samples, cfg.seed + 1)
    sim = SimConfig(paths=args.paths, dt=args.dt, seed=cfg.seed, threads=cfg.threads)
    rows = []
    for v in VEHICLE_ORDER:
        for s in random_strategies(v, p, args.strategies, cfg.grid.w_max, cfg.seed, lambdas):
            rows.extend(compare_strategy(s, p, lambdas, nu, sim, big))
    text = write_oracle_csv([r.row() for r in rows], args.out)
    if args.out is None:
        out.write(text)
    worst = max(abs(r.z_score) for r in rows)
    if worst > args.gate:
        print(f"oracle: max |z| = {worst:.3f} exceeds gate {args.gate}", file=sys.stderr)
        return EXIT_GATE
    return 0


def cmd_bounds(args, out):
    cfg = _config(args)
    w0, w1 = weight_bounds(cfg.market, cfg.mortality.lam)
    _kv(out, w0=w0, w1=w1)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decumulate", description="Optimal decumulation with the Annuity Family.")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="JSON run configuration (defaults when omitted)")
        p.add_argument("--threads", type=int, help="worker thread cap (overrides config)")
        return p

    p = sub.add_parser("calibrate", help="fit hazards from a life table and care-incidence table")
    p.add_argument("--life-table", required=True)
    p.add_argument("--factors", default=None, help="improvement factor set, e.g. 125y or 25y")
    p.add_argument("--care-table")
    p.add_argument("--sigma-hat", type=float, default=0.064)
    p.add_argument("--lambda-floor", type=float, default=0.010)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = with_config(sub.add_parser("price", help="price one strategy"))
    p.add_argument("--vehicle", required=True, type=Vehicle.parse)
    p.add_argument("--w", required=True, type=float)
    p.add_argument("--phi", required=True, type=float)
    p.add_argument("--beta", type=float, default=0.0)
    p.set_defaults(func=cmd_price)

    p = with_config(sub.add_parser("evaluate", help="tabulate cell surfaces to grid.csv"))
    p.add_argument("--vehicle", type=Vehicle.parse, help="one vehicle (all four when omitted)")
    p.add_argument("--nu", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = with_config(sub.add_parser("optimize", help="optimal strategy for one risk appetite"))
    p.add_argument("--b", required=True, type=float)
    p.add_argument("--psi", required=True, type=float)
    p.add_argument("--nu", type=float)
    p.set_defaults(func=cmd_optimize)

    p = with_config(sub.add_parser("sweep", help="decision map over the appetite grid"))
    p.add_argument("--out", required=True)
    p.add_argument("--png")
    p.add_argument("--nu", type=float)
    p.set_defaults(func=cmd_sweep)

    p = with_config(sub.add_parser("oracle", help="closed forms vs Monte Carlo"))
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--dt", type=float, default=1.0 / 12.0)
    p.add_argument("--strategies", type=int, default=10, help="random strategies per vehicle")
    p.add_argument("--closed-form-samples", type=int, default=20_000)
    p.add_argument("--gate", type=float, default=4.0, help="largest acceptable |z|")
    p.add_argument("--nu", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = with_config(sub.add_parser("bounds", help="market-weight ceilings w0 and w1"))
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (lifetimes.TableFormatError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

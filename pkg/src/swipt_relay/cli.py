"""Command-line front end.

Exit codes: 0 success, 1 error (bad flags, bad config, failed verification),
2 infeasible instance (``solve`` only).
"""
from __future__ import annotations

import argparse
import os
import sys

from . import bounds
from .model import Allocation, ChannelState, DomainError, SystemParams
from .montecarlo import (
    RNG_ALGORITHM,
    ConfigError,
    FadingSpec,
    McConfig,
    Policy,
    mc_row,
    solve_row,
    sweep,
)
from .oracle import FLOPS_PER_NEWTON_STEP, ConvergenceError, GridSpec, brute_force_solve, interior_point_fixed_theta
from .solver import SolverConfig, Status, solve, verify_kkt
from .tableio import read_config, read_table, to_number, write_table

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

PARAM_FIELDS = ("Q", "sigma2", "T0", "eta", "Pd", "Pe", "eps_d", "eps_e")
DERIVED_KEYS = ("t0_us", "eps_sum", "pd_pe")
SOLVER_KEYS = ("n", "tol_pt_rel", "tol_constraint")
OTHER_KEYS = ("seed", "trials", "K", "omega1", "omega2", "workers", "g1", "g2")
KNOWN_KEYS = set(PARAM_FIELDS + DERIVED_KEYS + SOLVER_KEYS + OTHER_KEYS)

BENCH_PRESETS = {
    # Fig. 3 caption setting and the (different) setting quoted in the text
    "fig3-caption": {"Pd": 10.0, "Pe": 10.0, "eps_sum": 0.1, "g2": 0.3},
    "fig3-body": {"Pd": 5.0, "Pe": 5.0, "eps_sum": 10.0, "g2": 0.1},
}
BENCH_G1 = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _policies(text: str) -> list[Policy]:
    try:
        return [Policy(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"policies must be among {[p.value for p in Policy]}")


def _common(parser):
    g = parser.add_argument_group("system parameters (override --config)")
    g.add_argument("--config", help="flat 'key = value' file")
    g.add_argument("--Q", dest="Q", type=float, help="source power, mW")
    g.add_argument("--sigma2", type=float, help="noise power, mW")
    g.add_argument("--t0", dest="T0", type=float, help="sample period, s")
    g.add_argument("--t0-us", dest="t0_us", type=float, help="sample period, microseconds")
    g.add_argument("--eta", type=float, help="harvesting efficiency")
    g.add_argument("--pd", dest="Pd", type=float, help="decoder static power, mW")
    g.add_argument("--pe", dest="Pe", type=float, help="encoder static power, mW")
    g.add_argument("--eps-d", dest="eps_d", type=float, help="decoder energy per unit rate")
    g.add_argument("--eps-e", dest="eps_e", type=float, help="encoder energy per unit rate")
    g.add_argument("--eps-sum", dest="eps_sum", type=float, help="sets eps_d = eps_e = value/2")
    g.add_argument("--n", type=int, help="theta grid levels")
    g.add_argument("--tol-pt-rel", dest="tol_pt_rel", type=float)
    o = parser.add_argument_group("output")
    o.add_argument("-o", "--output", help="output file (default stdout)")
    o.add_argument("--format", choices=("csv", "jsonl"), default="csv")


def _fading_flags(parser):
    parser.add_argument("--K", type=float, help="Rice factor (default 1)")
    parser.add_argument("--omega1", type=float, help="mean S-R gain (default 0.4)")
    parser.add_argument("--omega2", type=float, help="mean R-D gain (default 0.4)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials (default 10000)")
    parser.add_argument("--seed", type=int, help="falls back to $SWIPT_SEED, then 0")
    parser.add_argument("--workers", type=int, help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swipt-relay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="near-optimal allocation for one channel")
    _common(p)
    p.add_argument("--g1", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--policy", default=Policy.DYNAMIC.value, choices=[v.value for v in Policy])
    p.add_argument("--verify", metavar="RECORD", help="check the allocations of a solve record against the KKT conditions")
    p.add_argument("--kkt-tol", type=float, default=1e-6)

    p = sub.add_parser("bound", help="closed-form lower bound on the optimal rate")
    _common(p)
    p.add_argument("--g1", type=float)
    p.add_argument("--g2", type=float)

    p = sub.add_parser("sweep", help="rows over one parameter axis")
    _common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, type=_floats)
    p.add_argument("--policies", type=_policies, default=[Policy.DYNAMIC])
    p.add_argument("--g1", type=float, help="fixed channel; omit both gains for Rician draws")
    p.add_argument("--g2", type=float)
    _fading_flags(p)

    p = sub.add_parser("mc", help="average throughput over Rician draws")
    _common(p)
    p.add_argument("--policies", type=_policies, default=[Policy.DYNAMIC])
    _fading_flags(p)

    p = sub.add_parser("oracle", help="brute-force grid optimum next to the bisection solver")
    _common(p)
    p.add_argument("--g1", type=float)
    p.add_argument("--g2", type=float)
    p.add_argument("--n-theta", type=int, default=200)
    p.add_argument("--n-lambda", type=int, default=400)
    p.add_argument("--n-pt", type=int, default=400)
    p.add_argument("--refine-rounds", type=int, default=2)

    p = sub.add_parser("bench", help="FLOP counts: bisection vs interior point over g1")
    _common(p)
    p.add_argument("--preset", choices=sorted(BENCH_PRESETS), default="fig3-caption")
    p.add_argument("--g1-values", type=_floats, default=list(BENCH_G1))
    p.add_argument("--tol", type=float, default=1e-8, help="relative accuracy asked of both methods")
    return parser


# --- settings resolution ------------------------------------------------------------


def _layers(args) -> list[dict]:
    layers = []
    if args.config:
        cfg = read_config(args.config)
        unknown = set(cfg) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        layers.append({k: to_number(v) for k, v in cfg.items()})
    flags = {k: v for k, v in vars(args).items() if k in KNOWN_KEYS and v is not None}
    layers.append(flags)
    return layers


def _merged(layers, base=None) -> dict:
    out = dict(base or {})
    for layer in layers:
        out.update(layer)
    return out


def resolve_params(layers, base=None) -> SystemParams:
    fields = {}
    for layer in [base or {}] + list(layers):
        fields.update({k: float(layer[k]) for k in PARAM_FIELDS if k in layer})
        if "t0_us" in layer:
            fields["T0"] = float(layer["t0_us"]) * 1e-6
        if "eps_sum" in layer:
            fields["eps_d"] = fields["eps_e"] = float(layer["eps_sum"]) / 2.0
        if "pd_pe" in layer:
            fields["Pd"] = fields["Pe"] = float(layer["pd_pe"])
    return SystemParams(**fields)


def resolve_solver(settings: dict) -> SolverConfig:
    kw = {k: settings[k] for k in SOLVER_KEYS if k in settings}
    if "n" in kw:
        kw["n"] = int(kw["n"])
    return SolverConfig(**kw)


def resolve_seed(settings: dict) -> int:
    if "seed" in settings:
        return int(settings["seed"])
    env = os.environ.get("SWIPT_SEED")
    return int(env) if env else 0


def _channel(settings) -> ChannelState:
    if "g1" not in settings or "g2" not in settings:
        raise ConfigError("--g1 and --g2 are required")
    return ChannelState(float(settings["g1"]), float(settings["g2"]))


def _fading(settings) -> FadingSpec:
    return FadingSpec(
        float(settings.get("K", 1.0)), float(settings.get("omega1", 0.4)), float(settings.get("omega2", 0.4))
    )


def _mc_config(settings, cfg) -> McConfig:
    return McConfig(
        trials=int(settings.get("trials", 10_000)),
        seed=resolve_seed(settings),
        solver_cfg=cfg,
        workers=int(settings.get("workers", 1)),
    )


def _header(command, p: SystemParams, cfg: SolverConfig | None = None, **extra) -> dict:
    h = {"command": command}
    h.update({k: getattr(p, k) for k in PARAM_FIELDS})
    if cfg is not None:
        h.update(n=cfg.n, tol_pt_rel=cfg.tol_pt_rel)
    h.update(extra)
    return h


# --- commands ------------------------------------------------------------------------


def cmd_solve(args) -> int:
    if args.verify:
        return _cmd_verify(args)
    layers = _layers(args)
    settings = _merged(layers)
    p, cfg, c = resolve_params(layers), resolve_solver(settings), _channel(settings)
    row = solve_row(p, c, args.policy, cfg)
    write_table([row], _header("solve", p, cfg), args.output, args.format)
    return EXIT_OK if row["status"] == Status.FEASIBLE.value else EXIT_INFEASIBLE


def _cmd_verify(args) -> int:
    record_header, records = read_table(args.verify)
    base = {k: to_number(v) for k, v in record_header.items() if k in PARAM_FIELDS}
    p = resolve_params(_layers(args), base)
    rows, ok = [], True
    for rec in records:
        c = ChannelState(float(rec["g1"]), float(rec["g2"]))
        alloc = Allocation(
            float(rec["tau_bits_per_s"]), float(rec["lambda"]), float(rec["pt_mw"]), float(rec["theta"])
        )
        report = verify_kkt(p, c, alloc, tol=args.kkt_tol)
        ok &= report.passed
        rows.append(
            {
                "g1": c.g1,
                "g2": c.g2,
                "passed": report.passed,
                "max_slackness": max(abs(r) for r in report.complementary_slackness_residuals),
                "max_primal": max(report.primal_residuals),
                "min_dual": min(report.duals),
            }
        )
    write_table(rows, _header("solve --verify", p, kkt_tol=args.kkt_tol), args.output, args.format)
    return EXIT_OK if ok and records else EXIT_ERROR


def cmd_bound(args) -> int:
    layers = _layers(args)
    settings = _merged(layers)
    p, c = resolve_params(layers), _channel(settings)
    row = {
        "g1": c.g1,
        "g2": c.g2,
        "half_theta_pt_mw": float(bounds.half_theta_pt(p, c)),
        "lower_bound_bits_per_s": float(bounds.lower_bound_tau(p, c)),
    }
    write_table([row], _header("bound", p), args.output, args.format)
    return EXIT_OK


def cmd_sweep(args) -> int:
    layers = _layers(args)
    settings = _merged(layers)
    p, cfg = resolve_params(layers), resolve_solver(settings)
    if "g1" in settings or "g2" in settings:
        source = _channel(settings)
        rows = sweep(p, source, args.axis, args.values, cfg, args.policies)
        header = _header("sweep", p, cfg, axis=args.axis)
    else:
        fading, mc = _fading(settings), _mc_config(settings, cfg)
        rows = sweep(p, fading, args.axis, args.values, mc, args.policies)
        header = _header(
            "sweep", p, cfg, axis=args.axis, K=fading.K, omega1=fading.omega1, omega2=fading.omega2,
            trials=mc.trials, seed=mc.seed, rng=RNG_ALGORITHM,
        )
    write_table(rows, header, args.output, args.format)
    return EXIT_OK


def cmd_mc(args) -> int:
    layers = _layers(args)
    settings = _merged(layers)
    p, cfg = resolve_params(layers), resolve_solver(settings)
    fading, mc = _fading(settings), _mc_config(settings, cfg)
    rows = [mc_row(p, fading, McConfig(mc.trials, mc.seed, pol, cfg, mc.workers)) for pol in args.policies]
    header = _header(
        "mc", p, cfg, K=fading.K, omega1=fading.omega1, omega2=fading.omega2,
        trials=mc.trials, seed=mc.seed, rng=RNG_ALGORITHM,
    )
    write_table(rows, header, args.output, args.format)
    return EXIT_OK


def cmd_oracle(args) -> int:
    layers = _layers(args)
    settings = _merged(layers)
    p, cfg, c = resolve_params(layers), resolve_solver(settings), _channel(settings)
    grid = GridSpec(args.n_theta, args.n_lambda, args.n_pt, args.refine_rounds)
    brute = brute_force_solve(p, c, grid)
    report = solve(p, c, cfg)
    rows = []
    for method, alloc, feasible in (
        ("bruteforce", brute, brute is not None),
        ("bisection", report.best, report.feasible),
    ):
        a = alloc or Allocation(0.0, 0.0, 0.0, 0.0)
        rows.append(
            {
                "g1": c.g1,
                "g2": c.g2,
                "method": method,
                "status": (Status.FEASIBLE if feasible else Status.INFEASIBLE).value,
                "tau_bits_per_s": a.tau,
                "lambda": a.lam,
                "pt_mw": a.pt,
                "theta": a.theta,
            }
        )
    header = _header(
        "oracle", p, cfg, n_theta=grid.n_theta, n_lambda=grid.n_lambda, n_pt=grid.n_pt,
        refine_rounds=grid.refine_rounds,
    )
    write_table(rows, header, args.output, args.format)
    return EXIT_OK


def bench_rows(p: SystemParams, g2: float, g1_values, cfg: SolverConfig, ip_tol: float) -> list[dict]:
    """FLOP totals over the theta grid for each g1: bisection vs interior point."""
    rows = []
    for g1 in g1_values:
        c = ChannelState(float(g1), float(g2))
        report = solve(p, c, cfg)
        if not report.feasible:
            rows.append(
                {"g1": c.g1, "flops_bisection": 0, "flops_ip": 0, "ratio": float("nan"), "status": "Infeasible",
                 "bisection_iters": 0, "ip_newton_steps": 0, "max_rel_tau_gap": float("nan")}
            )
            continue
        steps, gap = 0, 0.0
        d = report.diagnostics
        for theta, tau in zip(d.theta, d.tau):
            ip = interior_point_fixed_theta(p, c, float(theta), tol=ip_tol)
            steps += ip.iterations
            gap = max(gap, abs(ip.tau - tau) / tau)
        flops_ip = FLOPS_PER_NEWTON_STEP * steps
        rows.append(
            {
                "g1": c.g1,
                "flops_bisection": report.total_flops,
                "flops_ip": flops_ip,
                "ratio": flops_ip / report.total_flops,
                "status": report.status.value,
                "bisection_iters": report.total_iterations,
                "ip_newton_steps": steps,
                "max_rel_tau_gap": gap,
            }
        )
    return rows


def cmd_bench(args) -> int:
    preset = BENCH_PRESETS[args.preset]
    layers = _layers(args)
    p = resolve_params(layers, {k: v for k, v in preset.items() if k != "g2"})
    settings = _merged(layers)
    settings.setdefault("tol_pt_rel", args.tol)
    cfg = resolve_solver(settings)
    rows = bench_rows(p, preset["g2"], args.g1_values, cfg, args.tol)
    header = _header("bench", p, cfg, preset=args.preset, g2=preset["g2"], ip_tol=args.tol)
    write_table(rows, header, args.output, args.format)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "bound": cmd_bound,
    "sweep": cmd_sweep,
    "mc": cmd_mc,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DomainError, ConfigError, ConvergenceError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``tandem-aoi <subcommand> [flags]``.

Exit codes: 0 success, 1 validation mismatch, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analytic, optimizer, simulator
from .distributions import DETERMINISTIC, EXPONENTIAL, GAMMA, ServiceDistribution

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# frozen column orders
ANALYZE_COLUMNS = (
    "lambda", "mu", "dist", "k", "mean_p",
    "p_busy", "effective_rate", "e_x2", "e_xt", "avg_aoi",
    "peak_numerator", "prob_min_index", "avg_peak_aoi",
)
SIMULATE_COLUMNS = (
    "lambda", "mu", "dist", "k", "mean_p", "model", "n_packets", "seed",
    "avg_aoi", "avg_peak_aoi", "n_deliveries", "busy_found_fraction", "e_xt_hat",
    "ci_halfwidth_aoi", "ci_halfwidth_peak", "ci_halfwidth_busy", "ci_halfwidth_xt", "admitted_rate",
)
VALIDATE_COLUMNS = ("quantity", "analytic", "simulated", "rel_error", "ci_halfwidth", "within_tol", "in_ci", "passed")
OPTIMIZE_COLUMNS = ("k", "omega1", "omega2", "best_mean_p", "best_value", "avg_aoi", "avg_peak_aoi")
SWEEP_COLUMNS = ("k", "mean_p", "avg_aoi", "avg_peak_aoi")
SWEEP_ALPHA_COLUMNS = ("k", "alpha", "best_mean_p", "best_value")
SWEEP_K_COLUMNS = (
    "k", "fixed_mean_p", "avg_aoi_fixed", "avg_peak_aoi_fixed",
    "opt_mean_p_aoi", "opt_avg_aoi", "opt_mean_p_peak", "opt_avg_peak_aoi",
)
TRADEOFF_COLUMNS = ("k", "omega1", "omega2", "mean_p", "avg_aoi", "avg_peak_aoi", "objective")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(optimizer.PRESETS))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--dist", choices=(GAMMA, DETERMINISTIC, EXPONENTIAL), default=GAMMA)
    p.add_argument("--k", type=float, action="append")
    p.add_argument("--mean-p", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--pmin", type=float)
    p.add_argument("--pmax", type=float)
    p.add_argument("--format", choices=("json", "csv"), help="default: csv for sweep/tradeoff, json otherwise")
    p.add_argument("--out")


def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-packets", type=int, default=simulator.DEFAULT_N_PACKETS)
    p.add_argument("--seed", type=int, default=simulator.DEFAULT_SEED)
    p.add_argument("--warmup", type=float, default=simulator.DEFAULT_WARMUP)
    p.add_argument("--batches", type=int, default=simulator.DEFAULT_BATCHES)


def _weights(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega1", type=float, default=1.0)
    p.add_argument("--omega2", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tandem-aoi", description="Age of information in a computation -> transmission tandem queue.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="closed-form average and peak AoI")
    _common(p)

    p = sub.add_parser("simulate", help="discrete-event simulation")
    _common(p)
    _sim_flags(p)
    p.add_argument("--model", choices=("actual", "equivalent"), default="actual")
    p.add_argument("--trace", help="write a per-packet event trace CSV here")

    p = sub.add_parser("validate", help="simulate and compare with the closed forms")
    _common(p)
    _sim_flags(p)
    p.add_argument("--tol", type=float, default=0.01, help="relative tolerance (default 0.01)")

    p = sub.add_parser("optimize", help="weighted optimum over E[P]")
    _common(p)
    _weights(p)
    p.add_argument("--grid", type=int, default=optimizer.DEFAULT_GRID)

    p = sub.add_parser("sweep", help="curves over E[P], alpha or k")
    _common(p)
    _weights(p)
    p.add_argument("--over", choices=("mean-p", "alpha", "k"), default="mean-p")
    p.add_argument("--grid", type=int)
    p.add_argument("--alpha-min", type=float, default=1e-3)
    p.add_argument("--alpha-max", type=float, default=10.0)
    p.add_argument("--fixed-mean-p", type=float, default=4.0)

    p = sub.add_parser("tradeoff", help="weighted-sum AoI / peak-AoI frontier")
    _common(p)
    p.add_argument("--n-weights", type=int, default=21)
    p.add_argument("--grid", type=int, default=optimizer.DEFAULT_GRID)
    return parser


# -- argument resolution -----------------------------------------------------


def _resolve(args) -> dict:
    base = dict(optimizer.PRESETS["paper-defaults"])
    if args.preset:
        base.update(optimizer.PRESETS[args.preset])
    for flag, key in (("lam", "lam"), ("b0", "b0"), ("alpha", "alpha"), ("pmin", "p_min"), ("pmax", "p_max")):
        v = getattr(args, flag)
        if v is not None:
            base[key] = v
    if args.mu is not None and (args.b0 is not None or args.alpha is not None):
        raise UsageError("--mu cannot be combined with --b0/--alpha")
    return base


def _shapes(args) -> list[float | None]:
    if args.dist == DETERMINISTIC:
        if args.k:
            raise UsageError("--k does not apply to a deterministic distribution")
        return [None]
    if args.dist == EXPONENTIAL:
        if args.k and any(k != 1 for k in args.k):
            raise UsageError("exponential distribution has k = 1")
        return [1.0]
    if not args.k:
        raise UsageError("--dist gamma needs --k")
    return list(args.k)


def _coupling(res: dict) -> optimizer.Coupling:
    return optimizer.Coupling(res["b0"], res["alpha"], res["p_min"], res["p_max"])


def _single_config(args) -> analytic.SystemConfig:
    res = _resolve(args)
    shapes = _shapes(args)
    if len(shapes) != 1:
        raise UsageError(f"{args.command} takes a single --k")
    if args.mean_p is None:
        raise UsageError(f"{args.command} needs --mean-p")
    k = shapes[0]
    dist = ServiceDistribution.deterministic(args.mean_p) if k is None else ServiceDistribution.gamma(k, args.mean_p)
    mu = args.mu if args.mu is not None else _coupling(res).mu(args.mean_p)
    return analytic.SystemConfig(res["lam"], dist, mu)


def _config_fields(cfg: analytic.SystemConfig) -> dict:
    d = cfg.dist
    return {
        "lambda": cfg.lam,
        "mu": cfg.mu,
        "dist": d.kind,
        "k": d.shape_k if d.kind == GAMMA else None,
        "mean_p": d.mean,
    }


# -- output ------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return "inf"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


# figure-data commands default to CSV, everything else to JSON
CSV_BY_DEFAULT = frozenset({"sweep", "tradeoff"})


def _emit(args, obj: dict, columns: tuple, rows: list[dict]) -> None:
    fmt = args.format or ("csv" if args.command in CSV_BY_DEFAULT else "json")
    if fmt == "json":
        text = json.dumps(_json_safe(obj), indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def _sim_config(args, cfg) -> simulator.SimConfig:
    return simulator.SimConfig(cfg, args.n_packets, args.seed, args.warmup, args.batches)


def cmd_analyze(args) -> int:
    cfg = _single_config(args)
    a = analytic.analyze(cfg)
    fields = _config_fields(cfg)
    _emit(args, {"config": fields, "analytics": a.as_dict()}, ANALYZE_COLUMNS, [{**fields, **a.as_dict()}])
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _single_config(args)
    sc = _sim_config(args, cfg)
    run = simulator.simulate_actual(sc) if args.model == "actual" else simulator.simulate_equivalent(sc)
    if args.trace:
        simulator.write_trace(run, args.trace)
    m = simulator.summarize(run, sc).as_dict()
    fields = _config_fields(cfg)
    meta = {"model": args.model, "n_packets": sc.n_packets, "seed": sc.master_seed}
    obj = {"config": fields, "simulation": {**meta, "warmup_fraction": sc.warmup_fraction, "batch_count": sc.batch_count}, "metrics": m}
    _emit(args, obj, SIMULATE_COLUMNS, [{**fields, **meta, **m}])
    return EXIT_OK


def validation_checks(a: analytic.AoiAnalytics, m: simulator.SimMetrics, tol: float) -> list[dict]:
    """Relative-error and CI-containment checks of simulation vs closed form."""
    checks = []
    for name, ana, sim, hw in (
        ("avg_aoi", a.avg_aoi, m.avg_aoi, m.ci_halfwidth_aoi),
        ("avg_peak_aoi", a.avg_peak_aoi, m.avg_peak_aoi, m.ci_halfwidth_peak),
    ):
        rel = abs(sim - ana) / abs(ana)
        within = rel <= tol
        in_ci = abs(sim - ana) <= hw
        checks.append(
            {
                "quantity": name,
                "analytic": ana,
                "simulated": sim,
                "rel_error": rel,
                "ci_halfwidth": hw,
                "within_tol": within,
                "in_ci": in_ci,
                "passed": within and in_ci,
            }
        )
    return checks


def cmd_validate(args) -> int:
    cfg = _single_config(args)
    sc = _sim_config(args, cfg)
    a = analytic.analyze(cfg)
    m = simulator.summarize(simulator.simulate_actual(sc), sc)
    checks = validation_checks(a, m, args.tol)
    ok = all(c["passed"] for c in checks)
    obj = {
        "config": _config_fields(cfg),
        "simulation": {"n_packets": sc.n_packets, "seed": sc.master_seed, "tol": args.tol},
        "analytics": a.as_dict(),
        "metrics": m.as_dict(),
        "checks": checks,
        "passed": ok,
    }
    _emit(args, obj, VALIDATE_COLUMNS, checks)
    if not ok:
        for c in checks:
            if not c["passed"]:
                print(
                    f"FAIL {c['quantity']}: analytic={c['analytic']:.6g} simulated={c['simulated']:.6g} "
                    f"rel_error={c['rel_error']:.3%} ci_halfwidth={c['ci_halfwidth']:.4g}",
                    file=sys.stderr,
                )
        return EXIT_FAIL
    return EXIT_OK


def cmd_optimize(args) -> int:
    res = _resolve(args)
    c = _coupling(res)
    w = optimizer.Weights(args.omega1, args.omega2)
    results, rows = [], []
    for k in _shapes(args):
        r = optimizer.optimize(c, k, res["lam"], w, grid=args.grid)
        row = {
            "k": k,
            "omega1": w.omega1,
            "omega2": w.omega2,
            "best_mean_p": r.best_mean_p,
            "best_value": r.best_value,
            "avg_aoi": r.best_analytics.avg_aoi,
            "avg_peak_aoi": r.best_analytics.avg_peak_aoi,
        }
        rows.append(row)
        results.append({**row, "best_analytics": r.best_analytics.as_dict(), "curve": [p._asdict() for p in r.curve]})
    _emit(args, {"lambda": res["lam"], "coupling": res, "results": results}, OPTIMIZE_COLUMNS, rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    res = _resolve(args)
    c = _coupling(res)
    shapes = _shapes(args)
    rows: list[dict] = []
    if args.over == "mean-p":
        grid = args.grid or 91
        for k in shapes:
            for p in optimizer.sweep_mean_p(c, k, res["lam"], grid=grid):
                rows.append({"k": k, "mean_p": p.mean_p, "avg_aoi": p.avg_aoi, "avg_peak_aoi": p.avg_peak_aoi})
        columns = SWEEP_COLUMNS
    elif args.over == "alpha":
        grid = args.grid or 40
        if not 0 < args.alpha_min <= args.alpha_max:
            raise UsageError("need 0 < --alpha-min <= --alpha-max")
        alphas = np.geomspace(args.alpha_min, args.alpha_max, grid).tolist()
        w = optimizer.Weights(args.omega1, args.omega2)
        for k in shapes:
            for alpha, best_p, best_v in optimizer.sweep_alpha(c, alphas, k, res["lam"], w):
                rows.append({"k": k, "alpha": alpha, "best_mean_p": best_p, "best_value": best_v})
        columns = SWEEP_ALPHA_COLUMNS
    else:
        if None in shapes:
            raise UsageError("--over k needs gamma shapes")
        rows = optimizer.variance_sweep(c, shapes, res["lam"], fixed_mean_p=args.fixed_mean_p, grid=args.grid or optimizer.DEFAULT_GRID)
        columns = SWEEP_K_COLUMNS
    _emit(args, {"over": args.over, "lambda": res["lam"], "coupling": res, "rows": rows}, columns, rows)
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    res = _resolve(args)
    c = _coupling(res)
    rows = []
    for k in _shapes(args):
        for p in optimizer.tradeoff_frontier(c, k, res["lam"], n_weights=args.n_weights, grid=args.grid):
            rows.append({"k": k, **p._asdict()})
    _emit(args, {"lambda": res["lam"], "coupling": res, "frontier": rows}, TRADEOFF_COLUMNS, rows)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "tradeoff": cmd_tradeoff,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, analytic.AnalyticError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

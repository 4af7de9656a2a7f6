"""Command-line front end for the controller-processing pipeline.

Subcommands: reduce, discretize, decompose, plan, lift, verify, simulate,
compare, cost.  Exit codes: 0 success, 2 validation error, 3 numerical
failure.  Numeric output is printed with 9 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:      # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FsPath

import numpy as np

from . import fixtures
from . import interlace as il
from .lifting import (equivalence_report, lift_interlaced_controller,
                      lifted_closed_loop)
from .ltisys import (ParallelForm, TransferFunction, discretize,
                     partial_fraction, reduce_controller)
from .pathsim import (FixturePlant, FormulaPlant, Path, Scenario, compare,
                      feasibility_pretest, simulate,
                      NumericalBlowupError, PathLostError)
from .vehicle import LINCOLN_2017, VehicleParams

VALIDATION_ERROR = 2
NUMERICAL_ERROR = 3


def _fmt(x):
    return f"{x:.9g}"


def load_config(path):
    if path is None:
        return {}
    p = FsPath(path)
    if not p.exists():
        raise ValueError(f"config file not found: {path}")
    if p.suffix == ".json":
        return json.loads(p.read_text())
    with open(p, "rb") as f:
        return tomllib.load(f)


def _load_tf(spec) -> TransferFunction:
    builtin = {"c0": fixtures.load_c0, "c5": fixtures.load_c5,
               "cd": fixtures.load_cd,
               "plant_nominal": fixtures.load_plant_nominal}
    if spec in builtin:
        return builtin[spec]()
    if not FsPath(spec).exists():
        raise ValueError(f"controller file not found: {spec}")
    return TransferFunction.load(spec)


def _parallel(args) -> ParallelForm:
    tf = _load_tf(args.controller)
    if not tf.is_discrete:
        tf = discretize(tf, args.period, method=args.method)
    return partial_fraction(tf)


def _rule(spec):
    if spec.startswith("nyquist:"):
        return il.NyquistFraction(float(spec.split(":", 1)[1]))
    if spec.startswith("relsep:"):
        return il.RelativeSeparation(float(spec.split(":", 1)[1]))
    if spec.startswith("explicit:"):
        return il.Explicit(spec.split(":", 1)[1].split(","))
    raise ValueError(f"unknown classification rule {spec!r}")


def _plan(pf, args) -> il.InterlacePlan:
    if args.plan:
        with open(args.plan) as f:
            return il.InterlacePlan.from_json(json.load(f))
    part = il.classify_poles(pf, _rule(args.rule))
    order = args.order.split(",") if args.order else None
    return il.make_plan(pf, part, order, args.input, args.output)


def _scenario(args, cfg) -> Scenario:
    path = fixtures.load_uturn() if args.scenario == "uturn" \
        else Path.from_csv(args.scenario)
    if args.plant == "fixture":
        plant = FixturePlant(fixtures.load_plant_nominal())
    else:
        vp = (VehicleParams.from_json(cfg["vehicle"]) if "vehicle" in cfg
              else LINCOLN_2017)
        plant = FormulaPlant(vp)
    return Scenario(path=path, T=args.period, N=args.N,
                    duration=args.duration, lookahead=args.lookahead,
                    speed=args.speed, plant=plant, label=args.scenario)


def _write(obj, out, what):
    if out:
        with open(out, "w") as f:
            json.dump(obj, f, indent=2)
        print(f"{what} written to {out}")
    else:
        json.dump(obj, sys.stdout, indent=2)
        print()


# ---------------------------------------------------------------------------
# subcommands

def cmd_reduce(args, cfg):
    tf = _load_tf(args.controller)
    red, hsv = reduce_controller(tf, args.target_order,
                                 drop_fastest=not args.keep_fastest)
    print("hankel singular values:", " ".join(_fmt(s) for s in hsv))
    _write(red.to_json(), args.out, "reduced controller")


def cmd_discretize(args, cfg):
    tf = _load_tf(args.controller)
    d = discretize(tf, args.period, method=args.method,
                   snap_tol=args.snap_tol)
    print("poles:", " ".join(_fmt(abs(p)) if p.imag else _fmt(p.real)
                             for p in d.poles()))
    _write(d.to_json(), args.out, "discrete controller")


def cmd_decompose(args, cfg):
    pf = _parallel(args)
    print("direct term:", _fmt(pf.direct))
    for bid, b in zip(pf.block_ids, list(pf.first_order) + list(pf.second_order)):
        if hasattr(b, "pole"):
            print(f"  {bid}: residue {_fmt(b.residue)} pole {_fmt(b.pole)}")
        else:
            print(f"  {bid}: num {[_fmt(v) for v in b.num]} "
                  f"den {[_fmt(v) for v in b.den]}")
    _write(pf.to_json(), args.out, "parallel form")


def cmd_plan(args, cfg):
    pf = _parallel(args)
    plan = _plan(pf, args)
    out = plan.to_json()
    out["resampled"] = []
    for bid in plan.slots:
        rs = il.resample_slow_block(pf.block(bid), plan.N, pf.dt)
        out["resampled"].append({
            "block": bid,
            "w_poly": [float(c) for c in rs.w_poly],
            "gain": float(rs.tf_NT.num[0]),
            "pole": float(-rs.tf_NT.den[1]),
        })
    _write(out, args.out, "interlace plan")


def cmd_lift(args, cfg):
    pf = _parallel(args)
    plan = _plan(pf, args)
    lq = lift_interlaced_controller(pf, plan)
    print(f"lifted controller: {lq.n_states} states, N={lq.N}, "
          f"period {_fmt(lq.period)} s")
    _write(lq.to_json(), args.out, "lifted quadruple")


def cmd_verify(args, cfg):
    pf = _parallel(args)
    plan = _plan(pf, args)
    rng = np.random.default_rng(args.seed)
    lq = lift_interlaced_controller(pf, plan)
    rep = equivalence_report(lq, pf, plan,
                             rng.standard_normal(100 * plan.N))
    print("lifted vs switched max |error|:", _fmt(rep["max_abs_error"]))
    scenario = _scenario(args, cfg)
    plant_d = scenario.plant.discrete(scenario.T)
    _, rho = lifted_closed_loop(lq, plant_d)
    print("interlaced closed-loop spectral radius:", _fmt(rho))
    verdict = feasibility_pretest(scenario, pf)
    print("slow single-rate pretest:",
          "stable" if verdict.stable else "NOT feasible",
          f"(radius {_fmt(verdict.spectral_radius)}, "
          f"performance ratio {_fmt(verdict.performance_ratio)})")
    out = dict(rep, interlaced_spectral_radius=rho,
               pretest=verdict.to_json())
    _write(out, args.out, "verification report")


def _run_variants(args, cfg):
    pf = _parallel(args)
    plan = _plan(pf, args)
    scenario = _scenario(args, cfg)
    variants = args.variants.split(",")
    with ThreadPoolExecutor() as ex:
        futs = {v: ex.submit(simulate, scenario, pf, v,
                             plan if v == "interlaced" else None)
                for v in variants}
        return scenario, pf, plan, {v: f.result() for v, f in futs.items()}


def cmd_simulate(args, cfg):
    _, _, _, results = _run_variants(args, cfg)
    outdir = FsPath(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = "uturn" if args.scenario == "uturn" else FsPath(args.scenario).stem
    for v, r in results.items():
        if args.format == "csv":
            p = outdir / f"{name}_{v}.csv"
            r.to_csv(p)
        else:
            p = outdir / f"{name}_{v}.json"
            with open(p, "w") as f:
                json.dump(dict(r.metrics(), variant=v), f, indent=2)
        print(f"{v}: rms cross-track {_fmt(r.rms_cross_track)} m -> {p}")


def cmd_compare(args, cfg):
    _, _, _, results = _run_variants(args, cfg)
    rep = compare(list(results.values()))
    for a, b, rms, mx in rep.pairs:
        print(f"{a} vs {b}: rms deviation {_fmt(rms)} m, "
              f"max {_fmt(mx)} m")
    _write(rep.to_json(), args.out, "comparison report")


def cmd_cost(args, cfg):
    pf = _parallel(args)
    plan = _plan(pf, args)
    fast = il.cost_single_rate_fast(pf)
    slow = il.cost_single_rate_slow(pf, plan.N)
    inter = il.cost_interlaced(pf, plan)
    print(f"single-rate fast worst: {fast.worst[0]} mult {fast.worst[1]} add")
    print(f"interlaced worst:       {inter.worst[0]} mult {inter.worst[1]} add")
    print("savings ratio:", _fmt(il.savings_ratio(fast, inter)))
    _write({"single_rate_fast": fast.to_json(),
            "single_rate_slow": slow.to_json(),
            "interlaced": inter.to_json(),
            "savings_ratio": il.savings_ratio(fast, inter)},
           args.out, "cost report")


# ---------------------------------------------------------------------------

def _add_controller_args(p, default="cd"):
    p.add_argument("--controller", default=default,
                   help="tf JSON file or builtin fixture name "
                        "(c0, c5, cd, plant_nominal)")
    p.add_argument("--period", type=float, default=fixtures.T_FAST,
                   help="fast sampling period T [s]")
    p.add_argument("--method", default="mpz", choices=["mpz", "zoh"],
                   help="discretization method when the controller is "
                        "continuous")


def _add_plan_args(p):
    p.add_argument("--plan", help="interlace plan JSON (overrides the rule)")
    p.add_argument("--rule", default="explicit:b1,b2,b3",
                   help="nyquist:K | relsep:R | explicit:id,id,...")
    p.add_argument("--order", help="slot order, comma separated block ids")
    p.add_argument("--input", default="I1", choices=["I1", "I2"])
    p.add_argument("--output", default="O1", choices=["O1", "O2"])


def _add_scenario_args(p):
    p.add_argument("--scenario", default="uturn",
                   help="'uturn' fixture or a waypoint CSV (x,y[,v])")
    p.add_argument("--plant", default="fixture",
                   choices=["fixture", "formula"])
    p.add_argument("--N", type=int, default=fixtures.N_CASE)
    p.add_argument("--duration", type=float, default=25.0)
    p.add_argument("--lookahead", type=float, default=6.0)
    p.add_argument("--speed", type=float, default=None,
                   help="constant speed override [m/s]")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="interlaced-control",
        description="interlaced multirate controller pipeline")
    ap.add_argument("--config", help="TOML or JSON config file")
    ap.add_argument("--seed", type=int, default=0,
                    help="seed for randomized verification inputs")
    ap.add_argument("--format", default="csv", choices=["csv", "json"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="balanced truncation pipeline")
    _add_controller_args(p, default="c0")
    p.add_argument("--target-order", type=int, default=6)
    p.add_argument("--keep-fastest", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("discretize", help="continuous -> discrete")
    _add_controller_args(p, default="c5")
    p.add_argument("--snap-tol", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("decompose", help="partial fraction form")
    _add_controller_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("plan", help="interlacing schedule + resampled blocks")
    _add_controller_args(p)
    _add_plan_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("lift", help="lifted LTI quadruple of the plan")
    _add_controller_args(p)
    _add_plan_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("verify",
                       help="lifted/switched equivalence, stability, pretest")
    _add_controller_args(p)
    _add_plan_args(p)
    _add_scenario_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="closed-loop lane keeping runs")
    _add_controller_args(p)
    _add_plan_args(p)
    _add_scenario_args(p)
    p.add_argument("--variants",
                   default="single_rate_fast,interlaced")
    p.add_argument("--outdir", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="trajectory deviation between variants")
    _add_controller_args(p)
    _add_plan_args(p)
    _add_scenario_args(p)
    p.add_argument("--variants",
                   default="single_rate_fast,single_rate_slow,interlaced")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cost", help="per-instant multiply/add accounting")
    _add_controller_args(p)
    _add_plan_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cost)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return VALIDATION_ERROR
    except (NumericalBlowupError, PathLostError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())

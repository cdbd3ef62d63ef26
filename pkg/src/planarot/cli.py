"""Command-line front end.

Exit codes: 0 success, 1 a verification failed, 2 usage error,
3 infeasible instance, 4 unreadable input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import formats
from .decomposition import decompose, decomposition_stats
from .errors import Infeasible, NotApplicable, PlanarOTError, TooLarge
from .geometry import DEFAULT_TOL
from .measures import DiscreteMeasure
from .ot_core import brute_force_value, solve_kantorovich, verify_duality
from .pipeline import InstanceConfig, gen, run_config, run_pipeline
from .rebuild import rebuild_plan
from .svg import write_plan_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _emit(obj, path):
    text = formats.dumps(obj)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _apply_config(args):
    """Values from ``--config`` override the command-line flags."""
    if not getattr(args, "config", None):
        return args
    cfg = formats.read_json(args.config)
    if not isinstance(cfg, dict):
        raise InputError(f"{args.config}: config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr in ("cost",) and not isinstance(value, str):
            value = json.dumps(value)
        setattr(args, attr, value)
    return args


def _cost(args):
    if not args.cost:
        raise InputError("--cost is required")
    try:
        return formats.cost_from_json(args.cost)
    except json.JSONDecodeError as exc:
        raise InputError(f"--cost:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except (KeyError, TypeError) as exc:
        raise InputError(f"--cost: malformed literal ({exc})") from None


def _measures(args) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    if not args.mu or not args.nu:
        raise InputError("--mu and --nu are required")
    return formats.read_measure(args.mu), formats.read_measure(args.nu)


def _plan_and_pots(path):
    obj = formats.read_json(path)
    plan = formats.plan_from_json(obj["plan"] if "plan" in obj else obj)
    pots = formats.potentials_from_json(obj["potentials"]) if "potentials" in obj else None
    return plan, pots


def _plan_or_solve(args, mu, nu, c):
    if getattr(args, "plan", None):
        return _plan_and_pots(args.plan)[0]
    return solve_kantorovich(mu, nu, c, args.tol).plan


def _norm_of(c):
    return getattr(c, "norm", None) or getattr(c, "K", None)


# -- subcommands ------------------------------------------------------------


def cmd_gen(args):
    cfg = _instance_config(args)
    mu, nu = gen(cfg)
    formats.write_measure(mu, args.mu or "mu.csv")
    formats.write_measure(nu, args.nu or "nu.csv")
    if args.json:
        _emit(cfg.to_dict(), args.json)
    return EXIT_OK


def cmd_solve(args):
    mu, nu = _measures(args)
    c = _cost(args)
    sol = solve_kantorovich(mu, nu, c, args.tol)
    _emit(
        {
            "value": sol.value,
            "plan": formats.plan_to_json(sol.plan),
            "potentials": formats.potentials_to_json(sol.potentials),
            "pivots": sol.pivots,
        },
        args.json,
    )
    if args.svg:
        write_plan_svg(args.svg, sol.plan, mu, nu, norm=_norm_of(c), title=f"value {sol.value:.6g}")
    return EXIT_OK


def _stats_table(stats) -> str:
    lines = [f"{'quantity':<20}{'value':>24}"]
    for key in ("n_rigid", "n_faces_used", "rigid_mass", "ambiguous_mass", "n_ambiguous_atoms"):
        lines.append(f"{key:<20}{stats[key]!r:>24}")
    for fid, mass in stats["mass_per_face"].items():
        lines.append(f"{'face ' + str(fid) + ' mass':<20}{mass!r:>24}")
    return "\n".join(lines)


def cmd_decompose(args):
    mu, nu = _measures(args)
    c = _cost(args)
    plan = _plan_or_solve(args, mu, nu, c)
    d = decompose(plan, mu, nu, c, args.tol)
    stats = decomposition_stats(d)
    print(_stats_table(stats))
    if args.json:
        _emit(formats.decomposition_to_json(d, stats), args.json)
    return EXIT_OK


def cmd_rebuild(args):
    mu, nu = _measures(args)
    c = _cost(args)
    plan = _plan_or_solve(args, mu, nu, c)
    if args.decomposition:
        d = formats.decomposition_from_json(formats.read_json(args.decomposition))
    else:
        d = decompose(plan, mu, nu, c, args.tol)
    report = rebuild_plan(plan, d, mu, nu, c, coord_tol=args.coord_tol, tol=args.tol)
    ok = report.passed()
    _emit({"plan": formats.plan_to_json(report.new_plan), "report": {**report.as_dict(), "passed": ok}}, args.json)
    if args.svg:
        write_plan_svg(args.svg, report.new_plan, mu, nu, d, _norm_of(c), title="rebuilt plan")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args):
    mu, nu = _measures(args)
    c = _cost(args)
    if not args.plan:
        raise InputError("--plan is required (solve output or plan JSON)")
    plan, pots = _plan_and_pots(args.plan)
    if args.potentials:
        pots = formats.potentials_from_json(formats.read_json(args.potentials))
    if pots is None:
        raise InputError("potentials missing: pass --potentials or a solve output")
    report = verify_duality(plan, pots, mu, nu, c, tol=args.duality_tol, geom_tol=args.tol)
    _emit(report.as_dict(), args.json)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_oracle(args):
    mu, nu = _measures(args)
    c = _cost(args)
    exact = brute_force_value(mu, nu, c, args.tol)
    lp = solve_kantorovich(mu, nu, c, args.tol).value
    err = abs(lp - exact)
    ok = err <= args.duality_tol * (1 + abs(exact))
    _emit({"oracle_value": exact, "lp_value": lp, "abs_error": err, "passed": ok}, args.json)
    return EXIT_OK if ok else EXIT_FAIL


def _instance_config(args) -> InstanceConfig:
    kw = {"seed": args.seed, "n": args.n, "m": args.m, "mass_mode": args.mass_mode, "tol": args.tol}
    if args.cost:
        kw["cost"] = formats._load_literal(args.cost)
    if args.coord_tol is not None:
        kw["coord_tol"] = args.coord_tol
    for key in ("domain", "target_domain"):
        if getattr(args, key, None) is not None:
            kw[key] = getattr(args, key)
    return InstanceConfig(**kw)


def cmd_pipeline(args):
    if args.mu or args.nu:
        mu, nu = _measures(args)
        c = _cost(args)
        result = run_pipeline(mu, nu, c, tol=args.tol, coord_tol=args.coord_tol, duality_tol=args.duality_tol)
    else:
        cfg = _instance_config(args)
        mu, nu = gen(cfg)
        c = formats.cost_from_json(cfg.cost)
        result = run_config(cfg)
    _emit(result.as_dict(include_time=args.timing), args.json)
    if args.svg:
        plan = result.rebuild.new_plan if result.rebuild is not None else solve_kantorovich(mu, nu, c, args.tol).plan
        write_plan_svg(args.svg, plan, mu, nu, norm=_norm_of(c), title=f"pipeline value {result.lp_value:.6g}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_plot(args):
    mu, nu = _measures(args)
    c = formats.cost_from_json(args.cost) if args.cost else None
    if args.plan:
        plan = _plan_and_pots(args.plan)[0]
    elif c is not None:
        plan = solve_kantorovich(mu, nu, c, args.tol).plan
    else:
        raise InputError("plot needs --plan or --cost")
    d = formats.decomposition_from_json(formats.read_json(args.decomposition)) if args.decomposition else None
    if d is None and c is not None:
        try:
            d = decompose(plan, mu, nu, c, args.tol)
        except NotApplicable:
            d = None
    write_plan_svg(args.svg or "plan.svg", plan, mu, nu, d, _norm_of(c) if c is not None else None)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _box(text):
    try:
        box = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"bad box literal: {exc.msg}") from None
    return tuple(tuple(float(v) for v in corner) for corner in box)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override the flags")
    common.add_argument("--cost", help="cost literal: JSON text or path to a JSON file")
    common.add_argument("--mu", help="source measure (CSV x1,x2,mass or JSON)")
    common.add_argument("--nu", help="target measure (CSV x1,x2,mass or JSON)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="geometric tolerance")
    common.add_argument("--duality-tol", type=float, default=1e-9, help="certificate tolerance")
    common.add_argument("--coord-tol", type=float, default=None, help="fiber grouping tolerance")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--svg", help="write an SVG drawing here")
    common.add_argument("--json", help="write JSON output here instead of stdout")

    parser = argparse.ArgumentParser(prog="planarot", description="Planar optimal transport with flat costs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    for name in ("gen", "pipeline"):
        p = add(name, cmd_gen if name == "gen" else cmd_pipeline,
                "generate a seeded instance" if name == "gen" else "solve, decompose, rebuild and verify")
        p.add_argument("--n", type=int, default=20)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--mass-mode", choices=["equal", "random"], default="equal")
        p.add_argument("--domain", type=_box, default=None, help='box literal [[x0,y0],[x1,y1]]')
        p.add_argument("--target-domain", type=_box, default=None)
        if name == "pipeline":
            p.add_argument("--timing", action="store_true", help="include wall time in the JSON")
    add("solve", cmd_solve, "exact optimal plan and potentials")
    for name, func, help_ in (
        ("decompose", cmd_decompose, "split a plan by cost face"),
        ("rebuild", cmd_rebuild, "rearrange face parts into a map"),
        ("verify", cmd_verify, "check a duality certificate"),
        ("plot", cmd_plot, "draw a plan as SVG"),
    ):
        p = add(name, func, help_)
        p.add_argument("--plan", help="plan JSON (or solve output)")
        if name in ("rebuild", "plot"):
            p.add_argument("--decomposition", help="decomposition JSON")
        if name == "verify":
            p.add_argument("--potentials", help="potentials JSON")
    add("oracle", cmd_oracle, "compare the solver with brute-force enumeration")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(formats.dumps({"witness": exc.witness}), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, ValueError, KeyError, OSError, TooLarge, NotApplicable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlanarOTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

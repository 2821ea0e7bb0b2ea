"""Command-line front end: ``stratahjb {solve,oracle,verify,stability,audit} CONFIG``.

Exit codes: 0 OK, 1 FAIL verdict or solver error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigParse, StrataError
from .grid import build_grid, cfl_time_steps
from .io import write_grid_csv, write_report, write_trajectory_csv
from .problems import closed_form
from .solver import CONTINUOUS, LSC, max_error, solve
from .trajectories import PiecewiseControl, integrate, oracle_search
from .verification import (
    FAIL,
    PASS,
    SKIP,
    Perturbation,
    causality_test,
    comparison_test,
    dpp_suite,
    hypothesis_audit,
    random_probes,
    scheme_unit,
    stability_test,
    uniqueness_crosscheck,
    unit_drift,
)

OK, FAILED, USAGE = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _box(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2 or vals[0] >= vals[1]:
        raise argparse.ArgumentTypeError("--box expects lo,hi with lo < hi")
    return vals[0], vals[1]


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, help="nodes per axis")
    p.add_argument("--timesteps", type=int, help="time steps (default: CFL rule)")
    p.add_argument("--box", type=_box, help="spatial box lo,hi")
    p.add_argument("--controls", type=int, help="resample the control set to N points")
    p.add_argument("--seed", type=int, help="seed for sampled checks")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratahjb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve on a grid and write CSV plus a JSON report")
    p.add_argument("config")
    _grid_args(p)
    p.add_argument("--mode", choices=("auto", CONTINUOUS, LSC), default=None)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--save-every", type=int, help="write every K-th time level")

    p = sub.add_parser("oracle", help="brute-force control search from one point")
    p.add_argument("config")
    p.add_argument("--at", type=_floats, required=True, help="t,x1,...,xd")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--slices", type=int, default=4, help="integration steps per piece")
    p.add_argument("--controls", type=int)
    p.add_argument("--trajectory", type=Path, help="write the optimal trajectory CSV here")

    p = sub.add_parser("verify", help="uniqueness, comparison, causality and DPP checks")
    p.add_argument("config")
    _grid_args(p)
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("stability", help="perturbation ladder")
    p.add_argument("config")
    _grid_args(p)
    p.add_argument("--eps0", type=float, default=0.2)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--perturb", choices=("drift", "terminal"), default="drift")
    p.add_argument("--direction", type=_floats, help="drift direction (default: first axis)")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("audit", help="sampled hypothesis audit")
    p.add_argument("config")
    p.add_argument("--samples", type=int, default=24)
    p.add_argument("--box", type=_box)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    return parser


# --------------------------------------------------------------------------- helpers
def _setting(args, solver: dict, key: str, cast, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in solver:
        return cast(solver[key])
    return default


def _problem(args):
    P, solver = load_config(args.config)
    if getattr(args, "controls", None):
        P = P.replace(controls=P.controls.resampled(args.controls), meta=dict(P.meta))
    return P, solver


def _grid(P, args, solver):
    box = _setting(args, solver, "box", lambda s: _box(s), (-2.0, 2.0))
    nodes = _setting(args, solver, "grid", int, 81 if P.d >= 2 else 401)
    g0 = build_grid(P.strat, box, nodes, 1, horizon=P.horizon)
    steps = _setting(args, solver, "timesteps", int, None) or cfl_time_steps(g0, P.c_f)
    return build_grid(P.strat, box, nodes, steps, horizon=P.horizon)


def _mode(P, requested):
    if requested in (None, "auto"):
        return LSC if P.terminal.mode == "lsc" else CONTINUOUS
    return requested


def _finish(report: dict, out: Path | None, name: str) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / name)


# --------------------------------------------------------------------------- commands
def cmd_solve(args) -> int:
    P, solver = _problem(args)
    grid = _grid(P, args, solver)
    mode = _mode(P, args.mode or solver.get("mode"))
    t0 = time.perf_counter()
    V = solve(P, grid, mode)
    elapsed = time.perf_counter() - t0
    args.out.mkdir(parents=True, exist_ok=True)
    stem = P.name
    csv_path = write_grid_csv(V, args.out / f"{stem}_grid.csv", _setting(args, solver, "save_every", int))
    report = {
        "problem": P.name,
        "mode": mode,
        "grid": {"shape": list(grid.shape), "box": [list(b) for b in grid.box], "time_steps": grid.time_steps,
                 "dx": grid.dx, "dt": grid.dt, "horizon": grid.horizon},
        "controls": P.controls.descriptor,
        "terminal": {"name": P.terminal.name, "mode": P.terminal.mode},
        "stats": V.stats,
        "runtime_seconds": round(elapsed, 3),
        "csv": csv_path.name,
    }
    cf = closed_form(P)
    if cf is not None:
        band = 2 * grid.dx
        err_all, n_all = max_error(V, cf.value)
        err_band, n_band = max_error(V, cf.value, cf.singular_distance, band)
        report["closed_form"] = {"note": cf.note, "max_error": err_all, "nodes": n_all,
                                 "max_error_banded": err_band, "band": band, "nodes_banded": n_band}
    write_report(report, args.out / f"{stem}_report.json")
    print(f"{P.name}: {mode} solve on {'x'.join(map(str, grid.shape))} nodes, {grid.time_steps} steps, "
          f"{elapsed:.2f} s")
    if cf is not None:
        print(f"max error vs closed form: {report['closed_form']['max_error']:.6g} "
              f"(banded {report['closed_form']['max_error_banded']:.6g})")
    print(f"wrote {csv_path}")
    return OK


def cmd_oracle(args) -> int:
    P, _ = _problem(args)
    if len(args.at) != P.d + 1:
        raise ConfigParse(f"--at expects t plus {P.d} coordinates")
    t0, x0 = args.at[0], np.array(args.at[1:])
    res = oracle_search(P, t0, x0, args.depth, args.slices)
    print(f"value {res.value:.12g}")
    for k, a in enumerate(res.schedule):
        ctrl = P.controls.samples[a]
        print(f"  [{res.breakpoints[k]:.6g}, {res.breakpoints[k + 1]:.6g}] control {a} = "
              f"({', '.join(f'{c:.6g}' for c in ctrl)})")
    print(f"evaluations {res.evaluations}")
    if args.trajectory is not None and res.schedule:
        ctrl = PiecewiseControl(tuple(res.breakpoints), tuple(res.schedule))
        dt = (res.breakpoints[1] - res.breakpoints[0]) / args.slices
        write_trajectory_csv(integrate(P, t0, x0, ctrl, dt), args.trajectory)
    return OK


def cmd_verify(args) -> int:
    P, solver = _problem(args)
    grid = _grid(P, args, solver)
    seed = _setting(args, solver, "seed", int, 0)
    mode = _mode(P, None)
    report: dict = {"problem": P.name, "mode": mode}
    statuses = []

    cc = uniqueness_crosscheck(P, grid)
    report["uniqueness_crosscheck"] = cc.to_dict()
    statuses.append(cc.status)
    print(f"uniqueness_crosscheck {cc.status} discrepancy={cc.discrepancy:.4g} tol={cc.tolerance:.4g} {cc.note}")

    report["comparison"] = []
    for delta in (0.0, 0.1, 0.3):
        cmp_ = comparison_test(P, grid, delta, mode)
        report["comparison"].append(cmp_.to_dict())
        statuses.append(cmp_.status)
        print(f"comparison delta={delta:g} {cmp_.status} range=[{cmp_.min_diff:.3g}, {cmp_.max_diff:.3g}]")

    ca = causality_test(P, grid, mode=mode)
    report["causality"] = ca.to_dict()
    statuses.append(ca.status)
    print(f"causality {ca.status}")

    audit = hypothesis_audit(P, seed=seed)
    if audit.verdict == FAIL:
        report["dpp"] = {"status": SKIP, "note": "hypothesis audit failed"}
        print("dpp SKIP (hypothesis audit failed)")
    else:
        V = solve(P, grid, mode)
        h = 2 * V.dt
        tol = 3 * scheme_unit(grid)
        kinds = ("backward",) if mode == LSC else ("super", "sub")
        report["dpp"] = []
        for kind in kinds:
            probes = random_probes(V, args.probes, h, seed=seed, margin=0.2,
                                   kind="backward" if kind == "backward" else "forward", on_levels=mode == LSC)
            rep = dpp_suite(P, V, kind, probes, h, tol)
            report["dpp"].append(rep.to_dict())
            statuses.append(rep.status)
            print(f"dpp {kind} {rep.status} passed={rep.passed} failed={rep.failed} skipped={rep.skipped}")

    verdict = FAIL if FAIL in statuses else PASS
    report["verdict"] = verdict
    _finish(report, args.out, f"{P.name}_verify.json")
    print(f"verdict {verdict}")
    return FAILED if verdict == FAIL else OK


def cmd_stability(args) -> int:
    P, solver = _problem(args)
    if P.terminal.mode != "lipschitz":
        print("stability SKIP: terminal cost is not Lipschitz")
        return OK
    grid = _grid(P, args, solver)
    if args.perturb == "drift":
        direction = args.direction or [1.0] + [0.0] * (P.d - 1)
        if len(direction) != P.d:
            raise ConfigParse(f"--direction expects {P.d} components")
        pert = unit_drift(direction)
    else:
        pert = Perturbation(k=lambda X: np.exp(-np.sum(X * X, axis=1)), k_bound=1.0)
    rep = stability_test(P, grid, pert, args.eps0, args.levels)
    for e, dv in zip(rep.epsilons, rep.differences):
        print(f"eps={e:.6g} max|u_n - u|={dv:.6g}")
    print(f"stability {rep.status} C={rep.constant:.4g} tol={rep.tolerance:.4g}")
    _finish({"problem": P.name, "perturbation": args.perturb, **rep.to_dict()}, args.out, f"{P.name}_stability.json")
    return FAILED if rep.status == FAIL else OK


def cmd_audit(args) -> int:
    P, solver = _problem(args)
    box = args.box or (_box(solver["box"]) if "box" in solver else (-2.0, 2.0))
    seed = _setting(args, solver, "seed", int, 0)
    rep = hypothesis_audit(P, samples=args.samples, box=box, seed=seed)
    for item in rep.items:
        print(f"{item.name:<14} {item.status:<5} {item.detail}")
    print(f"verdict {rep.verdict}")
    _finish(rep.to_dict(), args.out, f"{P.name}_audit.json")
    return FAILED if rep.verdict == FAIL else OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
    "stability": cmd_stability,
    "audit": cmd_audit,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigParse as exc:
        print(f"stratahjb: config error: {exc}", file=sys.stderr)
        return USAGE
    except StrataError as exc:
        print(f"stratahjb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())

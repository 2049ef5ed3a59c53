"""Command line entry point (``spatel-swarm``).

Exit codes: 0 satisfied (optimal plan or satisfied trajectory), 2 best
effort (no plan meets the margin, violation minimized; or a monitored
trajectory that does not satisfy the formula), 3 input error, 4 time limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import scenario as S
from .grid import OccupancyMatrix, frames_from_csv, frames_to_csv
from .lowlevel import SimulationError, simulate
from .milp import MilpError, S_TIME_LIMIT, export_lp
from .monitor import QtsSignal, SignalTooShort, required_steps, spatel_robustness, verdict
from .planner import FlowPlan, PlanningError, PlanningTimeout, build_model, import_plan, plan
from .render import render_svg

log = logging.getLogger("spatel_swarm")

EXIT_OK, EXIT_BEST_EFFORT, EXIT_INPUT, EXIT_TIME_LIMIT = 0, 2, 3, 4


class InputError(Exception):
    pass


def _out_dir(args, default: str) -> Path:
    p = Path(args.out or default)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args) -> S.Scenario:
    overrides = {
        "alpha": args.alpha,
        "time_limit": args.time_limit,
        "capacity": args.capacity,
        "mode": args.mode,
    }
    sc = S.load(args.scenario, overrides)
    if args.seed is not None:
        sc.seed = args.seed
    return sc


def _plan_code(p: FlowPlan) -> int:
    if p.status == S_TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_BEST_EFFORT if p.best_effort else EXIT_OK


def _summary(p: FlowPlan) -> dict:
    return {
        "status": p.status,
        "best_effort": p.best_effort,
        "mode": p.mode,
        "objective": p.objective_value,
        "rho_star": p.robustness_value,
        "monitored_robustness": p.monitored_robustness,
        "verdict": verdict(p.monitored_robustness),
        "displacement_total": p.displacement_total,
        "steps": p.K,
        "solver": p.timings,
    }


def _write_plan(p: FlowPlan, out: Path) -> None:
    # wall-clock numbers go to the summary only, so plan.json is reproducible
    d = p.to_dict()
    d["timings"] = {k: v for k, v in d["timings"].items() if not k.endswith("_s")}
    (out / "plan.json").write_text(json.dumps(d, indent=1) + "\n")
    (out / "summary.json").write_text(json.dumps(_summary(p), indent=1) + "\n")
    (out / "frames.csv").write_text(frames_to_csv(p.occupancies))


def _print_summary(p: FlowPlan) -> None:
    s = _summary(p)
    print(f"status={s['status']} best_effort={s['best_effort']} objective={s['objective']:g} "
          f"rho*={s['rho_star']:g} monitored={s['monitored_robustness']:g} ({s['verdict']}) "
          f"displacement={s['displacement_total']}")


def _read_plan(path) -> FlowPlan:
    try:
        return FlowPlan.from_json(Path(path).read_text())
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise InputError(f"cannot read plan {path}: {e}") from None


def _render_frames(sc: S.Scenario, out: Path, frames, positions=None) -> None:
    fdir = out / "frames"
    fdir.mkdir(exist_ok=True)
    for k, m in enumerate(frames):
        pos = None if positions is None else positions[k]
        svg = render_svg(sc.grid, positions=pos, counts=m, regions=sc.regions,
                         title=f"{sc.name} k={k} t={k * sc.grid.step:g}s")
        (fdir / f"frame_{k:03d}.svg").write_text(svg)


# -- subcommands -------------------------------------------------------------------


def cmd_plan(args) -> int:
    sc = _load(args)
    out = _out_dir(args, "out")
    try:
        p = plan(sc.grid, sc.planner, sc.initial, sc.formula)
    except PlanningTimeout as e:
        print(f"time limit: {e}", file=sys.stderr)
        return EXIT_TIME_LIMIT
    _write_plan(p, out)
    _print_summary(p)
    return _plan_code(p)


def cmd_simulate(args) -> int:
    sc = _load(args)
    out = _out_dir(args, "out")
    if args.plan:
        p = _read_plan(args.plan)
        code = EXIT_OK
    else:
        try:
            p = plan(sc.grid, sc.planner, sc.initial, sc.formula)
        except PlanningTimeout as e:
            print(f"time limit: {e}", file=sys.stderr)
            return EXIT_TIME_LIMIT
        _write_plan(p, out)
        code = _plan_code(p)
    try:
        traj = simulate(p, sc.initial_positions(), sc.grid)
    except SimulationError as e:
        raise InputError(str(e)) from None
    (out / "trajectory.csv").write_text(traj.to_csv(args.samples_per_step))
    if not args.no_svg:
        _render_frames(sc, out, p.occupancies, [traj.boundary_positions(k) for k in range(p.K + 1)])
    print(f"simulated {traj.robot_count} robots over {traj.K} steps, max speed {traj.max_speed():g} m/s "
          f"(limit {sc.grid.max_speed:g}); frames match the plan")
    return code


def _frames_from_trajectory(sc: S.Scenario, text: str) -> list[OccupancyMatrix]:
    """Occupancy at each step boundary ``t = k dt`` present in a trajectory CSV."""
    by_t: dict = {}
    for row in csv.DictReader(io.StringIO(text)):
        by_t.setdefault(float(row["t"]), []).append((float(row["x"]), float(row["y"])))
    dt = sc.grid.step
    frames = []
    k = 0
    while True:
        pts = next((v for t, v in by_t.items() if abs(t - k * dt) < 1e-6), None)
        if pts is None:
            break
        frames.append(OccupancyMatrix.from_positions(sc.grid, pts))
        k += 1
    if not frames:
        raise InputError("trajectory has no sample at t = 0")
    return frames


def cmd_monitor(args) -> int:
    sc = _load(args)
    if args.frames:
        frames = frames_from_csv(Path(args.frames).read_text())
    elif args.trajectory:
        frames = _frames_from_trajectory(sc, Path(args.trajectory).read_text())
    else:
        frames = [sc.initial]
    if args.stationary or not (args.frames or args.trajectory):
        need = required_steps(sc.formula, sc.grid.step) + 1
        frames = list(frames) + [frames[-1]] * max(0, need - len(frames))
    try:
        rho = spatel_robustness(sc.formula, QtsSignal.from_occupancies(frames, sc.grid.step))
    except SignalTooShort as e:
        raise InputError(str(e)) from None
    v = verdict(rho)
    print(f"{rho:g} {v}")
    return EXIT_OK if rho >= 0 else EXIT_BEST_EFFORT


def cmd_export_lp(args) -> int:
    sc = _load(args)
    pm = build_model(sc.grid, sc.planner, sc.initial, sc.formula, violation=args.violation)
    path = Path(args.out or "model.lp")
    if path.is_dir():
        path = path / "model.lp"
    path.parent.mkdir(parents=True, exist_ok=True)
    export_lp(pm.model, path)
    print(f"wrote {path} ({pm.model.num_vars} variables, {pm.model.num_constraints} rows, K={pm.K})")
    return EXIT_OK


def cmd_import_sol(args) -> int:
    sc = _load(args)
    out = _out_dir(args, "out")
    try:
        p = import_plan(sc.grid, sc.planner, sc.initial, sc.formula, args.solution, violation=args.violation)
    except MilpError as e:
        raise InputError(f"solution rejected: {e}") from None
    _write_plan(p, out)
    _print_summary(p)
    if p.best_effort or p.monitored_robustness < 0:
        return EXIT_BEST_EFFORT
    return EXIT_OK


def cmd_render(args) -> int:
    sc = _load(args)
    out = _out_dir(args, "out")
    if args.plan:
        frames = _read_plan(args.plan).occupancies
    else:
        frames = [sc.initial]
    _render_frames(sc, out, frames)
    print(f"wrote {len(frames)} frame(s) to {out / 'frames'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario JSON file")
    common.add_argument("--mode", choices=["exact", "relaxed"])
    common.add_argument("--alpha", type=float)
    common.add_argument("--time-limit", type=float, dest="time_limit")
    common.add_argument("--seed", type=int, help="seed for in-cell robot placement")
    common.add_argument("--capacity", type=int)
    common.add_argument("--out", help="output directory (export-lp: file or directory)")

    ap = argparse.ArgumentParser(prog="spatel-swarm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="solve for a flow plan")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common], help="execute a plan with per-robot controls")
    p.add_argument("--plan", help="plan.json to execute (default: plan first)")
    p.add_argument("--samples-per-step", type=int, default=4)
    p.add_argument("--no-svg", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", parents=[common], help="robustness of a recorded signal")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--frames", help="occupancy frames CSV (blank-line separated)")
    g.add_argument("--trajectory", help="trajectory CSV with columns t,robot_id,x,y")
    p.add_argument("--stationary", action="store_true",
                   help="hold the last frame as long as the formula needs (default without a signal file)")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("export-lp", parents=[common], help="write the planning MILP in LP format")
    p.add_argument("--violation", action="store_true", help="export the violation-minimizing model")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("import-sol", parents=[common], help="build a plan from an external solution")
    p.add_argument("solution", help="'name value' solution file")
    p.add_argument("--violation", action="store_true")
    p.set_defaults(func=cmd_import_sol)

    p = sub.add_parser("render", parents=[common], help="SVG frames of a plan or the initial state")
    p.add_argument("--plan")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except S.ScenarioError as e:
        for ptr, msg in e.errors:
            print(f"error: {ptr or '/'}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PlanningError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

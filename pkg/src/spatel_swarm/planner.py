"""High-level planning: build the flow MILP, solve it, extract a plan."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import logic as L
from .encoder import EXACT as ENC_EXACT, RELAXED as ENC_RELAXED
from .encoder import FlowVars, encode_dynamics, encode_robustness
from .grid import GridConfig, OccupancyMatrix, neighbors
from .milp import LinExpr, MilpModel, S_INFEASIBLE, S_OPTIMAL, import_solution, solve
from .monitor import QtsSignal, spatel_robustness, steps_of

EXACT, RELAXED_ROUND = "exact", "relaxed_round"
DISPLACEMENT, NO_COST = "total_displacement", "none"

PLAN_FORMAT = 1


class PlanningError(RuntimeError):
    pass


class PlanningTimeout(PlanningError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    alpha: float = 1.0
    running_cost: str = DISPLACEMENT
    terminal_cost: str = NO_COST
    mode: str = EXACT
    capacity: int | None = None
    epsilon: float = 0.0
    time_limit: float | None = None
    aux_valuations: bool = False

    def __post_init__(self):
        if not (self.alpha >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.running_cost not in (DISPLACEMENT, NO_COST):
            raise ValueError(f"unknown running cost {self.running_cost!r}")
        if self.terminal_cost != NO_COST:
            raise ValueError(f"unknown terminal cost {self.terminal_cost!r}")
        if self.mode not in (EXACT, RELAXED_ROUND):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("capacity must be >= 1")


@dataclass
class FlowPlan:
    flows: dict  # (k, (i, j), (a, b)) -> int, nonzero entries only
    occupancies: list
    robustness_value: float  # rho* reported by the solver
    objective_value: float
    displacement_total: int
    step: float
    monitored_robustness: float = math.nan
    mode: str = EXACT
    status: str = S_OPTIMAL
    best_effort: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.occupancies) - 1

    def flow(self, k: int, cell, nb) -> int:
        return self.flows.get((k, tuple(cell), tuple(nb)), 0)

    def to_dict(self) -> dict:
        return {
            "format": PLAN_FORMAT,
            "mode": self.mode,
            "status": self.status,
            "best_effort": self.best_effort,
            "step": self.step,
            "robustness_value": _json_num(self.robustness_value),
            "monitored_robustness": _json_num(self.monitored_robustness),
            "objective_value": _json_num(self.objective_value),
            "displacement_total": self.displacement_total,
            "flows": [[k, *c, *nb, v] for (k, c, nb), v in sorted(self.flows.items())],
            "occupancies": [m.tolist() for m in self.occupancies],
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "FlowPlan":
        if d.get("format") != PLAN_FORMAT:
            raise ValueError(f"unsupported plan format {d.get('format')!r}")
        flows = {(k, (i, j), (a, b)): int(v) for k, i, j, a, b, v in d["flows"]}
        return cls(
            flows=flows,
            occupancies=[OccupancyMatrix(m) for m in d["occupancies"]],
            robustness_value=_from_json_num(d["robustness_value"]),
            objective_value=_from_json_num(d["objective_value"]),
            displacement_total=int(d["displacement_total"]),
            step=float(d["step"]),
            monitored_robustness=_from_json_num(d["monitored_robustness"]),
            mode=d["mode"],
            status=d["status"],
            best_effort=bool(d["best_effort"]),
            timings=dict(d.get("timings", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "FlowPlan":
        return cls.from_dict(json.loads(text))


def _json_num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _from_json_num(x):
    return math.nan if x is None else float(x)


# -- model assembly ----------------------------------------------------------------


@dataclass
class PlanningModel:
    model: MilpModel
    flows: FlowVars
    rho: object
    root: object
    K: int


def horizon_steps(phi, dt: float) -> int:
    return max(steps_of(L.horizon(phi), dt), 1)


def build_model(cfg: GridConfig, pcfg: PlannerConfig, N0: OccupancyMatrix, phi,
                violation: bool = False) -> PlanningModel:
    """Dynamics + tightened formula, root pinned.

    ``violation`` drops the lower bound on rho and minimizes ``-rho`` only.
    """
    phi = L.to_nnf(phi)
    K = horizon_steps(phi, cfg.step)
    model = MilpModel("violation" if violation else "plan")
    mode = ENC_EXACT if pcfg.mode == EXACT else ENC_RELAXED
    fv = encode_dynamics(model, cfg, N0, K, mode=mode, capacity=pcfg.capacity)
    # integer occupancies and thresholds make every robustness value an integer
    rho_integer = pcfg.mode == EXACT and all(float(c).is_integer() for c in L.thresholds(phi))
    enc = encode_robustness(
        model, phi, fv, cfg.step, aux_valuations=pcfg.aux_valuations, pin=True,
        rho_lb=None if violation else pcfg.epsilon, rho_integer=rho_integer,
    )
    if violation:
        model.set_objective(-1 * enc.rho)
    else:
        obj = -pcfg.alpha * LinExpr.of(enc.rho) if pcfg.alpha else LinExpr()
        if pcfg.running_cost == DISPLACEMENT:
            obj = obj + LinExpr.sum(fv.f.values())
        model.set_objective(obj)
    model.seal()
    return PlanningModel(model, fv, enc.rho, enc.root, K)


# -- extraction and rounding -----------------------------------------------------------


def extract_occupancies(solution, flows: FlowVars, tol: float = 1e-6) -> list[OccupancyMatrix]:
    """Read integral occupancies and check them against the flow recurrence."""
    n = {key: solution.value(var) for key, var in flows.n.items()}
    f = {key: solution.value(var) for key, var in flows.f.items()}
    for name, vals in (("occupancy", n), ("flow", f)):
        for key, v in vals.items():
            if abs(v - round(v)) > tol:
                raise PlanningError(f"{name} {key} = {v} is not integral")
    size, K = flows.size, flows.K
    frames = []
    for k in range(K + 1):
        m = np.array([[round(n[k, i, j]) for j in range(size)] for i in range(size)])
        frames.append(OccupancyMatrix(m))
    fi = {key: int(round(v)) for key, v in f.items()}
    for k in range(K):
        nxt = apply_flows(frames[k], {(c, nb): fi[k, c, nb] for (kk, c, nb) in fi if kk == k})
        if nxt != frames[k + 1]:
            raise PlanningError(f"occupancy at step {k + 1} does not follow from the flows")
    return frames


def apply_flows(m: OccupancyMatrix, step_flows: dict) -> OccupancyMatrix:
    """``N[k+1]`` from ``N[k]`` and ``{(cell, nb): count}``; checks the outflow caps."""
    counts = m.counts.copy()
    out = np.zeros_like(counts)
    for (c, nb), v in step_flows.items():
        if v < 0:
            raise PlanningError(f"negative flow {v} on {c}->{nb}")
        if nb not in neighbors(m.size, *c):
            raise PlanningError(f"{c}->{nb} is not a grid edge")
        out[c] += v
        counts[c] -= v
        counts[nb] += v
    if (out > m.counts).any():
        i, j = np.argwhere(out > m.counts)[0]
        raise PlanningError(f"outflow {out[i, j]} from cell ({i}, {j}) exceeds its {m.counts[i, j]} robots")
    return OccupancyMatrix(counts)


def round_relaxed(N0: OccupancyMatrix, frac: dict, K: int) -> tuple[dict, list[OccupancyMatrix]]:
    """Largest-remainder rounding of fractional flows, step by step.

    For each cell the outgoing flows are scaled down if they exceed the
    (integral) occupancy, their total is rounded half up, each flow is
    floored and the leftover units go to the largest fractional remainders,
    ties broken by neighbour order (north, west, east, south).
    """
    size = N0.size
    frames = [N0]
    flows: dict = {}
    for k in range(K):
        cur = frames[-1]
        step = {}
        for i in range(size):
            for j in range(size):
                nbs = neighbors(size, i, j)
                vals = np.array([max(0.0, float(frac.get((k, (i, j), nb), 0.0))) for nb in nbs])
                have = cur[i, j]
                s = vals.sum()
                if s > have and s > 0:
                    vals = vals * (have / s)
                    s = float(have)
                total = min(int(math.floor(s + 0.5 + 1e-9)), have)
                floors = np.floor(vals + 1e-9).astype(int)
                rem = vals - floors
                left = total - int(floors.sum())
                order = sorted(range(len(nbs)), key=lambda t: (-rem[t], t))
                for t in order[:max(left, 0)]:
                    floors[t] += 1
                for nb, v in zip(nbs, floors):
                    if v:
                        step[(i, j), nb] = int(v)
                        flows[k, (i, j), nb] = int(v)
        frames.append(apply_flows(cur, step))
    return flows, frames


# -- planning --------------------------------------------------------------------------


def fixed_flow_heuristic(pm: PlanningModel, N0: OccupancyMatrix, deadline=None, node_limit: int = 200):
    """Primal heuristic for :func:`milp.solve`.

    Rounds the flows of a fractional LP point into a valid integral plan, fixes
    them, and solves what is left (the formula variables), which is small. The
    first call also tries the stationary plan. In violation mode every plan is
    feasible, so this always yields an incumbent.
    """
    model = pm.model
    fidx = [(key, var.index) for key, var in pm.flows.f.items()]
    lb0 = np.array([v.lb for v in model.variables], dtype=float)
    ub0 = np.array([v.ub for v in model.variables], dtype=float)
    tried: set = set()

    def candidates(x):
        plans = [] if tried else [{}]
        frac = {key: float(x[i]) for key, i in fidx}
        plans.append(round_relaxed(N0, frac, pm.K)[0])
        out = []
        for flows in plans:
            sig = tuple(sorted(flows.items()))
            if sig in tried:
                continue
            tried.add(sig)
            lo, hi = lb0.copy(), ub0.copy()
            for key, i in fidx:
                lo[i] = hi[i] = flows.get(key, 0)
            limit = None if deadline is None else max(0.0, deadline - time.monotonic())
            sol = solve(model, time_limit=limit, node_limit=node_limit, bounds=(lo, hi))
            if sol.has_values:
                out.append(sol.x)
        return out

    return candidates


def _solve(pm: PlanningModel, pcfg: PlannerConfig, N0, cancel, deadline):
    limit = None if deadline is None else max(0.0, deadline - time.monotonic())
    return solve(pm.model, time_limit=limit, cancel=cancel,
                 heuristic=fixed_flow_heuristic(pm, N0, deadline))


def plan(cfg: GridConfig, pcfg: PlannerConfig, N0: OccupancyMatrix, phi, cancel=None) -> FlowPlan:
    if N0.total != cfg.robot_count:
        raise PlanningError(f"initial occupancy has {N0.total} robots, configuration says {cfg.robot_count}")
    if N0.depth != cfg.depth:
        raise PlanningError(f"initial occupancy depth {N0.depth} != grid depth {cfg.depth}")
    t0 = time.monotonic()
    deadline = None if pcfg.time_limit is None else t0 + pcfg.time_limit
    pm = build_model(cfg, pcfg, N0, phi)
    t_build = time.monotonic() - t0
    sol = _solve(pm, pcfg, N0, cancel, deadline)
    best_effort = False
    if sol.status == S_INFEASIBLE:
        best_effort = True
        pm = build_model(cfg, pcfg, N0, phi, violation=True)
        sol = _solve(pm, pcfg, N0, cancel, deadline)
        if sol.status == S_INFEASIBLE:
            raise PlanningError("dynamics are infeasible even without the formula margin (internal error)")
    if not sol.has_values:
        raise PlanningTimeout(f"solver stopped ({sol.status}) before finding any plan")
    t_solve = time.monotonic() - t0 - t_build
    timings = {"build_s": round(t_build, 4), "solve_s": round(t_solve, 4),
               "nodes": sol.stats.get("nodes", 0)}
    return assemble(cfg, pcfg, N0, phi, pm, sol, best_effort, timings)


def assemble(cfg: GridConfig, pcfg: PlannerConfig, N0: OccupancyMatrix, phi, pm: PlanningModel,
             sol, best_effort: bool = False, timings: dict | None = None) -> FlowPlan:
    """Turn a solution of ``pm`` into a monitored :class:`FlowPlan`."""
    rho = sol.value(pm.rho)
    if pcfg.mode == EXACT:
        frames = extract_occupancies(sol, pm.flows)
        flows = {key: int(round(sol.value(v))) for key, v in pm.flows.f.items() if round(sol.value(v))}
    else:
        frac = {key: sol.value(v) for key, v in pm.flows.f.items()}
        flows, frames = round_relaxed(N0, frac, pm.K)
    disp = int(sum(flows.values()))
    signal = QtsSignal.from_occupancies(frames, cfg.step)
    monitored = float(spatel_robustness(phi, signal))
    if best_effort:
        objective = -rho
    elif pcfg.mode == EXACT:
        objective = sol.objective_value
    else:
        objective = -pcfg.alpha * rho + (disp if pcfg.running_cost == DISPLACEMENT else 0)
    timings = dict(timings or {})
    timings.update(variables=pm.model.num_vars, constraints=pm.model.num_constraints)
    return FlowPlan(
        flows=flows,
        occupancies=frames,
        robustness_value=rho,
        objective_value=objective,
        displacement_total=disp,
        step=cfg.step,
        monitored_robustness=monitored,
        mode=pcfg.mode,
        status=sol.status,
        best_effort=best_effort,
        timings=timings,
    )


def import_plan(cfg: GridConfig, pcfg: PlannerConfig, N0: OccupancyMatrix, phi, path,
                violation: bool = False) -> FlowPlan:
    """Rebuild the planning model, validate an external ``name value`` solution, monitor it."""
    pm = build_model(cfg, pcfg, N0, phi, violation=violation)
    sol = import_solution(pm.model, path)
    return assemble(cfg, pcfg, N0, phi, pm, sol, best_effort=violation)

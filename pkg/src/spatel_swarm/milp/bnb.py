"""Best-first branch-and-bound over the simplex LP relaxation.

Until the first incumbent appears the search plunges depth-first.
"""

from __future__ import annotations

import heapq
import math
import time
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .model import BINARY, CONTINUOUS, INT_TOL, MilpError, MilpModel
from .simplex import CUTOFF, INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, Basis, SimplexLP

EXACT, RELAXED = "exact", "relaxed"

S_OPTIMAL = "optimal"
S_INFEASIBLE = "infeasible"
S_RELAXATION = "relaxation_only"
S_TIME_LIMIT = "time_limit"
S_UNBOUNDED = "unbounded"

GAP_TOL = 1e-6


@dataclass
class MilpSolution:
    status: str
    values: dict
    objective_value: float
    gap: float
    x: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def has_values(self) -> bool:
        return self.x is not None

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def value(self, var) -> float:
        return float(self.x[var.index]) if hasattr(var, "index") else self.values[var]


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int
    seq: int
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)
    parent: int = field(compare=False)
    basis: Basis | None = field(compare=False)


def objective_step(model: MilpModel, max_den: int = 10**6) -> float:
    """Spacing of attainable objective values, or 0 if they are not on a lattice.

    When every objective variable is integer the objective minus its constant
    is a multiple of the gcd of the coefficients.
    """
    g = Fraction(0)
    for i, c in model.objective.items():
        if model.variables[i].kind == CONTINUOUS:
            return 0.0
        f = Fraction(c)
        if f.denominator > max_den:
            return 0.0
        g = Fraction(math.gcd(g.numerator * f.denominator, f.numerator * g.denominator),
                     g.denominator * f.denominator)
    return float(g)


def _pack(model: MilpModel, status, x, gap, stats) -> MilpSolution:
    if x is None:
        return MilpSolution(status, {}, math.nan, gap, None, stats)
    values = {v.name: float(x[i]) for i, v in enumerate(model.variables)}
    return MilpSolution(status, values, float(model.objective_value(x)), gap, x, stats)


def solve(
    model: MilpModel,
    time_limit: float | None = None,
    integer_mode: str = EXACT,
    cancel=None,
    node_limit: int | None = None,
    heuristic=None,
    heuristic_every: int = 50,
    bounds=None,
) -> MilpSolution:
    """Solve a sealed model.

    ``cancel`` is any object with ``is_set()`` (e.g. ``threading.Event``); it
    and the time limit are checked between nodes, so a stop returns the best
    incumbent found so far with status ``time_limit``.

    ``heuristic(x)`` may return candidate full solutions built from a
    fractional LP point ``x``; feasible ones become incumbents. It runs at the
    root and then every ``heuristic_every`` nodes (ten times less often once
    an incumbent exists). ``bounds=(lb, ub)`` overrides the variable bounds.
    """
    if not model.sealed:
        raise MilpError("seal the model before solving")
    if integer_mode not in (EXACT, RELAXED):
        raise MilpError(f"unknown integer_mode {integer_mode!r}")
    t0 = time.monotonic()
    deadline = None if time_limit is None else t0 + time_limit
    A, sense, rhs, lb, ub, cost = model.arrays()
    if bounds is not None:
        lb, ub = (np.asarray(b, dtype=float).copy() for b in bounds)
    stats = {"nodes": 0, "lp_iterations": 0, "seconds": 0.0, "max_depth": 0, "heuristic": 0}

    def done(status, x, gap):
        stats["seconds"] = time.monotonic() - t0
        stats["lp_iterations"] = lp.iterations
        return _pack(model, status, x, gap, stats)

    lp = SimplexLP(A, sense, rhs, lb, ub, cost)
    root = lp.solve_cold(deadline)
    stats["nodes"] = 1
    if root.status == ITERATION_LIMIT:
        return done(S_TIME_LIMIT, None, math.inf)
    if root.status == INFEASIBLE:
        return done(S_INFEASIBLE, None, math.inf)
    if root.status == UNBOUNDED:
        return done(S_UNBOUNDED, None, math.inf)
    if integer_mode == RELAXED:
        return done(S_RELAXATION, root.x, math.nan)

    ints = np.flatnonzero(model.integer_mask())
    is_bin = np.array([model.variables[i].kind == BINARY for i in ints], dtype=bool)
    step = objective_step(model)
    incumbent_x = None
    incumbent = math.inf

    def prunable(bound: float) -> bool:
        if incumbent == math.inf:
            return False
        if step > 0:
            # the next better value is incumbent - step; prune if the LP bound rules it out
            return math.ceil(bound / step - GAP_TOL) * step >= incumbent - GAP_TOL
        return bound >= incumbent - GAP_TOL

    def try_heuristic(x):
        nonlocal incumbent, incumbent_x
        for cand in heuristic(x) or ():
            cand = np.asarray(cand, dtype=float)
            if (cand < lb - INT_TOL).any() or (cand > ub + INT_TOL).any() or model.violations(cand):
                continue
            val = float(cost @ cand)
            if val < incumbent - GAP_TOL:
                incumbent, incumbent_x = val, cand.copy()
                stats["heuristic"] += 1

    def heuristic_due() -> bool:
        if heuristic is None:
            return False
        every = heuristic_every if incumbent == math.inf else 10 * heuristic_every
        return stats["nodes"] == 1 or stats["nodes"] % every == 0

    heap: list[_Node] = []
    seq = 0
    state = 0  # seq of the node whose basis the LP currently holds
    cur = _Node(root.objective, 0, 0, lb.copy(), ub.copy(), -1, None)
    result = root
    stopped = False
    dive = None
    while True:
        if result is not None and result.status == OPTIMAL and not prunable(result.objective):
            x = result.x
            frac = np.abs(x[ints] - np.round(x[ints])) if ints.size else np.zeros(0)
            if frac.size == 0 or frac.max() <= INT_TOL:
                incumbent, incumbent_x = result.objective, x.copy()
            elif heuristic_due() and (try_heuristic(x) or prunable(result.objective)):
                pass  # the new incumbent closes this node
            else:
                # binaries before general integers, then most fractional, lowest index on ties
                score = np.abs(frac - 0.5) + np.where(is_bin, 0.0, 1.0)
                k = int(np.argmin(np.where(frac > INT_TOL, score, np.inf)))
                j = ints[k]
                v = x[j]
                snap = lp.basis()
                down_hi = cur.hi.copy()
                down_hi[j] = math.floor(v)
                up_lo = cur.lo.copy()
                up_lo[j] = math.ceil(v)
                children = [
                    (cur.lo, down_hi),
                    (up_lo, cur.hi),
                ]
                if v - math.floor(v) >= 0.5:
                    children.reverse()
                depth = -cur.neg_depth + 1
                stats["max_depth"] = max(stats["max_depth"], depth)
                for n, (lo_c, hi_c) in enumerate(children):
                    seq += 1
                    child = _Node(result.objective, -depth, seq, lo_c, hi_c, cur.seq, snap)
                    if n == 0 and incumbent == math.inf:
                        dive = child  # no incumbent yet: plunge into the rounding side
                    else:
                        heapq.heappush(heap, child)
        # next node
        result = None
        while heap or dive is not None:
            if (deadline is not None and time.monotonic() > deadline) or (
                cancel is not None and cancel.is_set()
            ) or (node_limit is not None and stats["nodes"] >= node_limit):
                stopped = True
                if dive is not None:
                    heapq.heappush(heap, dive)
                break
            if dive is not None:
                node, dive = dive, None
            else:
                node = heapq.heappop(heap)
            if prunable(node.bound):
                continue
            lp.set_structural_bounds(node.lo, node.hi)
            if incumbent == math.inf:
                cutoff = math.inf
            elif step > 0:
                cutoff = incumbent - step + GAP_TOL
            else:
                cutoff = incumbent - GAP_TOL
            if state != node.parent and not lp.load_basis(node.basis):
                result = lp.solve_cold(deadline)
            else:
                result = lp.solve_warm(cutoff=cutoff, deadline=deadline)
            state = node.seq
            cur = node
            stats["nodes"] += 1
            if result.status == ITERATION_LIMIT:
                stopped = True
                heapq.heappush(heap, node)
                result = None
                break
            if result.status in (INFEASIBLE, CUTOFF):
                result = None
                continue
            if result.status == UNBOUNDED:
                raise MilpError("LP relaxation became unbounded below a bounded root")
            break
        if result is None:
            break

    best_open = min((n.bound for n in heap), default=math.inf)
    if incumbent_x is None:
        if stopped:
            return done(S_TIME_LIMIT, None, math.inf)
        return done(S_INFEASIBLE, None, math.inf)
    x = _polish(lp, model, lb, ub, ints, incumbent_x, deadline)
    gap = max(0.0, incumbent - best_open) if heap else 0.0
    return done(S_TIME_LIMIT if stopped and heap else S_OPTIMAL, x, gap)


def _polish(lp: SimplexLP, model, lb, ub, ints, x, deadline):
    """Fix the integers at their rounded values and re-solve the continuous rest."""
    lo, hi = lb.copy(), ub.copy()
    r = np.round(x[ints])
    lo[ints] = r
    hi[ints] = r
    lp.set_structural_bounds(lo, hi)
    res = lp.solve_warm(deadline=None)
    if res.status == OPTIMAL and res.objective <= float(model.objective_value(x)) - model.objective_constant + 1e-6:
        out = res.x
    else:
        out = x.copy()
    out[ints] = r
    return out

import math
import os
import threading
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from milp_gen import build_model, enumerate_milp, random_lp_data, random_milp, vertex_optimum
from spatel_swarm.milp import (
    BINARY,
    CONTINUOUS,
    IMPORTED,
    LE,
    Constraint,
    INTEGER,
    S_INFEASIBLE,
    S_OPTIMAL,
    S_RELAXATION,
    S_TIME_LIMIT,
    LinExpr,
    MilpError,
    MilpModel,
    SealedModelError,
    SolutionValidationError,
    export_lp,
    import_solution,
    lp_text,
    parse_solution,
    solution_text,
    solve,
)
from spatel_swarm.milp.bnb import objective_step
from spatel_swarm.milp.simplex import OPTIMAL, solve_lp

GOLDEN = Path(__file__).parent / "golden"
seeds = st.integers(0, 2**32 - 1)


# -- model builder -----------------------------------------------------------------


def test_builder_basics():
    m = MilpModel("t")
    z = m.add_var("z", BINARY)
    assert m.variables[z.index].kind == BINARY
    assert (m.variables[z.index].lb, m.variables[z.index].ub) == (0, 1)
    x = m.add_var("x", CONTINUOUS, 0, 10)
    with pytest.raises(MilpError):
        m.add_var("x")
    with pytest.raises(MilpError):
        m.add_var("bad[1]")
    m.add_constraint(x + 2 * z <= 5, "c")
    m.set_objective(-1 * x + z)
    with pytest.raises(MilpError, match="unknown variable"):
        m.add_constraint(Constraint({"nope": 1.0}, LE, 1.0))
    with pytest.raises(MilpError, match="undeclared"):
        m.add_constraint(Constraint({7: 1.0}, LE, 1.0))
    for bad in ("free", "End", "e12", "x y"):
        with pytest.raises(MilpError):
            m.add_var(bad)
    m.seal()
    with pytest.raises(SealedModelError):
        m.add_var("w")
    with pytest.raises(SealedModelError):
        m.add_constraint(x <= 1)


def test_linexpr_algebra():
    m = MilpModel("t")
    x, y = m.add_var("x"), m.add_var("y")
    e = 3 - (2 * x - y) + LinExpr.sum([x, y, 4])
    assert e.terms == {x.index: -1.0, y.index: 2.0}
    assert e.const == 7
    assert e.value(np.array([1.0, 2.0])) == 10


# -- solver examples ---------------------------------------------------------------


def _tiny(kind=INTEGER):
    m = MilpModel("tiny")
    x = m.add_var("x", kind, 0, 10)
    m.add_constraint(x >= 2.5)
    m.set_objective(LinExpr.of(x))
    return m.seal(), x


def test_rounding_up():
    m, x = _tiny()
    sol = solve(m)
    assert sol.status == S_OPTIMAL and sol.value(x) == 3 and sol.objective_value == 3


def test_relaxed_mode():
    m, x = _tiny()
    sol = solve(m, integer_mode="relaxed")
    assert sol.status == S_RELAXATION and sol.value(x) == pytest.approx(2.5)


def test_infeasible():
    m = MilpModel("inf")
    x = m.add_var("x", CONTINUOUS, -5, 5)
    m.add_constraint(x >= 1)
    m.add_constraint(x <= 0)
    m.set_objective(LinExpr.of(x))
    assert solve(m.seal()).status == S_INFEASIBLE


def test_knapsack_matches_enumeration():
    w, v, cap = [3, 4, 5, 2, 6], [4, 5, 7, 3, 8], 11
    m = MilpModel("knap")
    xs = [m.add_var(f"x{i}", BINARY) for i in range(5)]
    m.add_constraint(LinExpr.sum(wi * x for wi, x in zip(w, xs)) <= cap)
    m.set_objective(LinExpr.sum(-vi * x for vi, x in zip(v, xs)))
    sol = solve(m.seal())
    best = min(-sum(v[i] for i in range(5) if s >> i & 1)
               for s in range(32) if sum(w[i] for i in range(5) if s >> i & 1) <= cap)
    assert sol.objective_value == best == -15


def test_heuristic_candidates_and_bound_override():
    w, v, cap = [3, 4, 5, 2, 6], [4, 5, 7, 3, 8], 11
    m = MilpModel("knap")
    xs = [m.add_var(f"x{i}", BINARY) for i in range(5)]
    m.add_constraint(LinExpr.sum(wi * x for wi, x in zip(w, xs)) <= cap)
    m.set_objective(LinExpr.sum(-vi * x for vi, x in zip(v, xs)))
    m.seal()
    calls = []

    def heur(x):
        calls.append(x)
        # an overweight pick is ignored, the empty knapsack is accepted
        return [np.ones(5), np.zeros(5)]

    sol = solve(m, heuristic=heur)
    assert calls and sol.stats["heuristic"] == 1
    assert sol.objective_value == -15
    # items 2 and 3 left out through the bounds only; items 0, 1, 4 then give 13 at best
    lb, ub = np.zeros(5), np.ones(5)
    ub[2] = ub[3] = 0
    sol = solve(m, bounds=(lb, ub))
    assert sol.objective_value == -13
    assert m.variables[2].ub == 1


def test_objective_step():
    m = MilpModel("s")
    a, b = m.add_var("a", INTEGER, 0, 3), m.add_var("b", INTEGER, 0, 3)
    m.set_objective(4 * a + 6 * b)
    assert objective_step(m) == 2
    m2 = MilpModel("s2")
    a, c = m2.add_var("a", INTEGER, 0, 3), m2.add_var("c", CONTINUOUS, 0, 3)
    m2.set_objective(a + c)
    assert objective_step(m2) == 0


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_simplex_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
    data = random_lp_data(rng, n, m)
    model = build_model(*data)
    res = solve_lp(*model.arrays())
    ref = vertex_optimum(*data)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(float(ref), abs=1e-6)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_bnb_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    model, data = random_milp(rng, int(rng.integers(1, 9)), int(rng.integers(0, 4)), int(rng.integers(1, 6)),
                              n_int=int(rng.integers(0, 2)))
    sol = solve(model)
    ref = enumerate_milp(data)
    if ref == math.inf:
        assert sol.status == S_INFEASIBLE
        return
    assert sol.status == S_OPTIMAL
    assert sol.objective_value == pytest.approx(ref, abs=1e-6)
    assert not model.violations(sol.x)
    ints = model.integer_mask()
    assert np.allclose(sol.x[ints], np.round(sol.x[ints]), atol=1e-6)
    relax = solve(model, integer_mode="relaxed")
    assert relax.objective_value <= sol.objective_value + 1e-6


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_lp_matches_linprog(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 15)), int(rng.integers(1, 12))
    A, senses, b, lo, hi, c = random_lp_data(rng, n, m)
    res = solve_lp(*build_model(A, senses, b, lo, hi, c).arrays())
    ub = senses == "<="
    ge = senses == ">="
    eq = senses == "=="
    ref = linprog(c, A_ub=np.vstack([A[ub], -A[ge]]), b_ub=np.concatenate([b[ub], -b[ge]]),
                  A_eq=A[eq] if eq.any() else None, b_eq=b[eq] if eq.any() else None,
                  bounds=list(zip(lo, hi)), method="highs")
    assert res.objective == pytest.approx(ref.fun, abs=1e-6)


def _hard_model(n=22):
    rng = np.random.default_rng(5)
    m = MilpModel("hard")
    xs = [m.add_var(f"x{i}", BINARY) for i in range(n)]
    w = rng.integers(20, 60, n)
    m.add_constraint(LinExpr.sum(int(a) * x for a, x in zip(w, xs)) == int(w.sum() // 2) + 1)
    m.set_objective(LinExpr.sum(int(a) * x for a, x in zip(rng.integers(1, 9, n), xs)))
    return m.seal()


def test_node_limit_and_cancel():
    m = _hard_model()
    sol = solve(m, node_limit=5)
    assert sol.status in (S_TIME_LIMIT, S_OPTIMAL, S_INFEASIBLE)
    assert sol.stats["nodes"] <= 6
    ev = threading.Event()
    ev.set()
    sol = solve(m, cancel=ev)
    assert sol.status in (S_TIME_LIMIT, S_OPTIMAL, S_INFEASIBLE)
    assert sol.stats["nodes"] <= 2


def test_time_limit_returns_quickly():
    m = _hard_model(40)
    sol = solve(m, time_limit=0.5)
    assert sol.stats["seconds"] < 5
    assert sol.status in (S_TIME_LIMIT, S_OPTIMAL, S_INFEASIBLE)


def test_solve_requires_sealed():
    m = MilpModel("open")
    m.add_var("x")
    with pytest.raises(MilpError):
        solve(m)


# -- LP file exchange -------------------------------------------------------------


def _one_var():
    m = MilpModel("one")
    x = m.add_var("x", CONTINUOUS, 0, 4)
    m.add_constraint(x >= 1, "lower")
    m.set_objective(LinExpr.of(x))
    return m.seal()


def _mixed():
    m = MilpModel("mixed")
    z = [m.add_var(f"z_{i}", BINARY) for i in range(3)]
    n = m.add_var("n_0_1", INTEGER, 0, 40)
    f = m.add_var("unbounded", CONTINUOUS, -math.inf, math.inf)
    g = m.add_var("g", CONTINUOUS, -2.5, math.inf)
    h = m.add_var("h", CONTINUOUS, -math.inf, 7)
    k = m.add_var("k", CONTINUOUS, 3, 3)
    m.add_constraint(LinExpr.sum(z) <= 2, "pick")
    m.add_constraint(n - 40 * z[0] >= -0.5, "bigm")
    m.add_constraint(f + g - h + 0.25 * k == 1, "eq")
    m.add_constraint(LinExpr.sum((i + 1) * m.add_var(f"long_variable_name_{i}") for i in range(12)) <= 100, "wrap")
    m.set_objective(-1 * f + 3 * n + z[1] - 2 * g)
    m.set_bounds(f, -10, 10)
    return m.seal()


def _golden_models():
    from spatel_swarm import logic as L
    from spatel_swarm.grid import GridConfig, OccupancyMatrix
    from spatel_swarm.planner import PlannerConfig, build_model as plan_model

    cfg = GridConfig(1, 2.0, 1, 2.0, 1.0)
    pm = plan_model(cfg, PlannerConfig(), OccupancyMatrix([[1, 0], [0, 0]]), L.parse("F[0,3) A[SE] O mu >= 1"))
    return {"one_var.lp": _one_var(), "mixed.lp": _mixed(), "plan_2x2.lp": pm.model}


@pytest.mark.parametrize("name", ["one_var.lp", "mixed.lp", "plan_2x2.lp"])
def test_lp_golden(name):
    text = lp_text(_golden_models()[name])
    path = GOLDEN / name
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(text)
    assert text == path.read_text()
    assert all(len(line) <= 79 for line in text.splitlines())


def test_lp_sections_in_order():
    text = lp_text(_one_var())
    order = [text.index(s) for s in ("Minimize", "Subject To", "Bounds", "End")]
    assert order == sorted(order)
    text = lp_text(_mixed())
    order = [text.index(s) for s in ("Minimize", "Subject To", "Bounds", "Binaries", "Generals", "End")]
    assert order == sorted(order)


def test_solution_roundtrip(tmp_path):
    m = _mixed()
    sol = solve(m)
    assert sol.status == S_OPTIMAL
    p = tmp_path / "sol.txt"
    p.write_text(solution_text(m, sol.x))
    back = import_solution(m, p)
    assert back.status == IMPORTED
    assert back.objective_value == pytest.approx(sol.objective_value, abs=1e-6)


def test_import_rejects_violations(tmp_path):
    m = _one_var()
    p = tmp_path / "bad.txt"
    p.write_text("x 0.5\n")
    with pytest.raises(SolutionValidationError, match="lower"):
        import_solution(m, p)
    p.write_text("x 1\ny 2\n")
    with pytest.raises(MilpError, match="unknown variable"):
        import_solution(m, p)


def test_missing_variable_defaults_to_lower_bound():
    m = _mixed()
    with pytest.warns(UserWarning, match="missing"):
        x = parse_solution(m, "z_0 1\n")
    assert x[m.index("z_0")] == 1
    assert x[m.index("g")] == -2.5
    assert x[m.index("z_1")] == 0


def test_export_lp_writes_file(tmp_path):
    p = export_lp(_one_var(), tmp_path / "m.lp")
    assert p.read_text() == lp_text(_one_var())


def test_highs_reads_exported_files(tmp_path):
    highspy = pytest.importorskip("highspy")
    for name, model in _golden_models().items():
        path = tmp_path / name
        export_lp(model, path)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        assert h.readModel(str(path)) == highspy.HighsStatus.kOk
        h.run()
        ours = solve(model)
        assert h.getInfo().objective_function_value == pytest.approx(ours.objective_value, abs=1e-6)
        # feed HiGHS' answer back through the importer
        lp = h.getLp()
        sol = tmp_path / (name + ".sol")
        sol.write_text("".join(f"{n} {v!r}\n" for n, v in zip(lp.col_names_, h.getSolution().col_value)))
        imp = import_solution(model, sol)
        assert imp.objective_value == pytest.approx(ours.objective_value, abs=1e-6)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formula_gen import random_occupancy, random_spatel, random_tssl
from spatel_swarm import logic as L
from spatel_swarm.grid import ALL_LABELS
from spatel_swarm.monitor import QtsSignal, required_steps, spatel_robustness

seeds = st.integers(0, 2**32 - 1)


def test_parse_checkerboard():
    f = L.parse("A[L] O (A[NW,SE] O (mu <= 0))")
    assert f == L.Spatial(L.ForallNext(ALL_LABELS, L.ForallNext(frozenset({"NW", "SE"}), L.Pred(L.LE, 0))))


def test_parse_atoms_and_equality():
    assert L.parse("mu >= 0") == L.Spatial(L.Pred(L.GE, 0))
    assert L.tssl("mu == 2") == L.TAnd((L.Pred(L.GE, 2), L.Pred(L.LE, 2)))
    assert L.tssl("true") == L.TTrue()


def test_parse_named_parts():
    defs = {"phi1": "A[SE] O mu <= 0", "phi4": "A[NW] O mu >= 3"}
    f = L.parse("G[0,40) !phi1 & F[30,40) phi4", definitions=defs)
    assert isinstance(f, L.And)
    g, h = f.args
    assert isinstance(g, L.Always) and (g.t1, g.t2) == (0, 40)
    assert g.arg == L.Spatial(L.TNot(L.tssl("A[SE] O mu <= 0")))
    assert isinstance(h, L.Eventually) and (h.t1, h.t2) == (30, 40)


def test_parse_program_constants():
    f = L.parse_program("const g = 3\nlet p = A[NE] O mu >= g\nF[0,2) p")
    assert f == L.Eventually(0, 2, L.Spatial(L.ForallNext(frozenset({"NE"}), L.Pred(L.GE, 3))))


@pytest.mark.parametrize("text", [
    "mu >= ", "F[2,1) mu >= 1", "A[XX] O mu >= 1", "A[] O mu >= 1", "mu >= g",
    "F[0,1) (mu >= 1", "A[NW] (mu >= 1 U[0] mu <= 2)",
])
def test_parse_errors(text):
    with pytest.raises(L.FormulaError):
        L.parse(text)


def test_parse_error_position():
    with pytest.raises(L.ParseError) as e:
        L.parse_program("const a = 1\nF[0,1) (mu >= a &)")
    assert e.value.line == 2


def test_horizon_examples():
    assert L.horizon(L.parse("G[0,20) F[0,5) A[L] O mu >= 1")) == 25
    assert L.horizon(L.parse("A[L] O mu >= 1")) == 0
    assert L.horizon(L.parse("(mu >= 1) U[1,4) G[0,2) mu <= 3")) == 6


def test_horizon_mission():
    text = open("scenarios/mission_8x8.json").read()
    import json

    f = L.parse_program("\n".join(json.loads(text)["formula"]))
    assert L.horizon(f) == 40


def _tssl_dual_examples():
    phi = L.tssl("mu >= 1")
    psi = L.tssl("mu <= 3")
    B = frozenset({"NW"})
    return [
        (L.Not(L.And((L.Eventually(0, 1, L.Spatial(phi)), L.Spatial(psi)))),
         L.Or((L.Always(0, 1, L.Spatial(L.TNot(phi))), L.Spatial(L.TNot(psi))))),
        (L.Not(L.Eventually(0, 5, L.Spatial(phi))), L.Always(0, 5, L.Spatial(L.TNot(phi)))),
        (L.TNot(L.ForallNext(B, phi)), L.ExistsNext(B, L.TNot(phi))),
    ]


@pytest.mark.parametrize("f,expected", _tssl_dual_examples())
def test_nnf_examples(f, expected):
    assert L.to_nnf(f) == expected
    assert L.is_nnf(expected)


def test_predicate_sites_polarity():
    sites = L.predicate_sites(L.tssl("mu >= 1 & !(mu <= 2) & !(!(mu >= 3))"))
    assert [(s.pred.c, s.negated, s.polarity) for s in sites] == [
        (1, False, L.NON_INCREASING),
        (2, True, L.NON_INCREASING),
        (3, False, L.NON_INCREASING),
    ]
    assert L.predicate_sites(L.tssl("mu <= 1"))[0].polarity == L.NON_DECREASING
    assert L.predicate_sites(L.parse("G[0,1) true")) == []


@given(seeds)
@settings(max_examples=200, deadline=None)
def test_print_parse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    f = random_spatel(rng, 4, 4, 6)
    assert L.parse(L.to_text(f)) == L.canonical(f)


@given(seeds)
@settings(max_examples=200, deadline=None)
def test_tssl_print_parse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    f = random_tssl(rng, 4, 4)
    assert L.tssl(L.to_text(f)) == f


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_nnf_preserves_robustness(seed):
    rng = np.random.default_rng(seed)
    f = random_spatel(rng, 4, 4, 4)
    g = L.to_nnf(f)
    assert L.is_nnf(g)
    assert L.horizon(g) == L.horizon(f)
    d = int(rng.integers(1, 3))
    K = required_steps(f, 1.0)
    frames = [random_occupancy(rng, d, int(rng.integers(0, 5))) for _ in range(K + 1)]
    s = QtsSignal.from_occupancies(frames, 1.0)
    assert spatel_robustness(g, s) == spatel_robustness(f, s)


@given(seeds, st.integers(0, 10))
@settings(max_examples=100, deadline=None)
def test_horizon_monotone(seed, b):
    f = random_spatel(np.random.default_rng(seed), 3, 4, 4)
    assert L.horizon(L.Eventually(0, b + 1, f)) >= L.horizon(f)
    assert L.horizon(L.Always(0, b + 1, f)) == b + 1 + L.horizon(f)

"""Random formulas and small-instance oracles shared by the test suite."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from spatel_swarm import logic as L
from spatel_swarm.grid import LABELS, OccupancyMatrix, build_qts, neighbors
from spatel_swarm.monitor import QtsSignal, spatel_robustness


def _labels(rng) -> frozenset:
    k = int(rng.integers(1, 5))
    return frozenset(rng.choice(LABELS, size=k, replace=False).tolist())


def random_tssl(rng, depth: int, n_max: int):
    if depth <= 1 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return L.TTrue()
        p = L.Pred(L.GE if rng.random() < 0.5 else L.LE, int(rng.integers(0, n_max + 2)))
        return L.TNot(p) if r > 0.85 else p
    kind = rng.choice(["and", "or", "en", "an", "eu", "au", "not"])
    sub = lambda: random_tssl(rng, depth - 1, n_max)  # noqa: E731
    if kind == "and":
        return L.TAnd((sub(), sub()))
    if kind == "or":
        return L.TOr((sub(), sub()))
    if kind == "en":
        return L.ExistsNext(_labels(rng), sub())
    if kind == "an":
        return L.ForallNext(_labels(rng), sub())
    if kind == "not":
        return L.TNot(sub())
    cls = L.ExistsUntil if kind == "eu" else L.ForallUntil
    return cls(_labels(rng), int(rng.integers(1, 3)), sub(), sub())


def random_spatel(rng, depth: int, n_max: int, budget: int):
    """Random SpaTeL formula with nesting depth <= ``depth`` and horizon <= ``budget`` steps."""
    if depth <= 1 or rng.random() < 0.2:
        return L.Spatial(random_tssl(rng, min(depth, 2), n_max))
    kinds = ["and", "or", "not", "spatial"]
    if budget >= 1:
        kinds += ["F", "G", "U", "F", "G"]
    kind = rng.choice(kinds)
    if kind == "spatial":
        return L.Spatial(random_tssl(rng, depth, n_max))
    if kind in ("and", "or"):
        args = (random_spatel(rng, depth - 1, n_max, budget), random_spatel(rng, depth - 1, n_max, budget))
        return L.And(args) if kind == "and" else L.Or(args)
    if kind == "not":
        return L.Not(random_spatel(rng, depth - 1, n_max, budget))
    t2 = int(rng.integers(1, budget + 1))
    t1 = int(rng.integers(0, t2))
    rest = budget - t2
    if kind == "U":
        return L.Until(t1, t2, random_spatel(rng, depth - 1, n_max, rest), random_spatel(rng, depth - 1, n_max, rest))
    cls = L.Eventually if kind == "F" else L.Always
    return cls(t1, t2, random_spatel(rng, depth - 1, n_max, rest))


def random_occupancy(rng, depth: int, robots: int) -> OccupancyMatrix:
    size = 2**depth
    counts = np.zeros(size * size, dtype=int)
    for c in rng.integers(0, size * size, robots):
        counts[c] += 1
    return OccupancyMatrix(counts.reshape(size, size))


# -- brute-force planner oracle (2 x 2 grids) ------------------------------------------


def states(size: int, robots: int) -> list[OccupancyMatrix]:
    out = []
    for combo in itertools.combinations_with_replacement(range(size * size), robots):
        c = np.zeros(size * size, dtype=int)
        for x in combo:
            c[x] += 1
        out.append(OccupancyMatrix(c.reshape(size, size)))
    return out


@lru_cache(maxsize=None)
def transition_costs(size: int, robots: int) -> dict:
    """``{(m, m2): min total flow}`` over all one-step integral flow plans."""
    edges = [((i, j), nb) for i in range(size) for j in range(size) for nb in neighbors(size, i, j)]
    out = {}
    for m in states(size, robots):
        ranges = [range(m[c] + 1) for c, _ in edges]
        for fl in itertools.product(*ranges):
            counts = m.counts.copy()
            outsum = np.zeros_like(counts)
            for (c, nb), v in zip(edges, fl):
                outsum[c] += v
                counts[c] -= v
                counts[nb] += v
            if (outsum > m.counts).any():
                continue
            key = (m, OccupancyMatrix(counts))
            cost = sum(fl)
            if cost < out.get(key, math.inf):
                out[key] = cost
    return out


def brute_force_plan(phi, N0: OccupancyMatrix, K: int, alpha: float, step: float = 1.0,
                     epsilon: float = 0.0):
    """Optimal (objective, robustness, best_effort) over all integral K-step plans.

    Mirrors the planner: minimize ``total flow - alpha * rho`` over plans with
    ``rho >= epsilon``; if there is none, maximize ``rho`` instead.
    """
    size, robots = N0.size, N0.total
    trans = transition_costs(size, robots)
    succ: dict = {}
    for (a, b), c in trans.items():
        succ.setdefault(a, []).append((b, c))
    qts = {}

    def q(m):
        if m not in qts:
            qts[m] = build_qts(m)
        return qts[m]

    best, best_rho_any = math.inf, -math.inf

    def rec(seq, cost):
        nonlocal best, best_rho_any
        if len(seq) == K + 1:
            rho = spatel_robustness(phi, QtsSignal(tuple(q(m) for m in seq), step))
            best_rho_any = max(best_rho_any, rho)
            if rho >= epsilon:
                best = min(best, cost - alpha * rho)
            return
        for nxt, c in succ[seq[-1]]:
            rec(seq + [nxt], cost + c)

    rec([N0], 0)
    if best < math.inf:
        return best, False, best_rho_any
    return -best_rho_any, True, best_rho_any

"""Robustness (quantitative) semantics of TSSL over a QTS and SpaTeL over a
discrete-time QTS signal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import logic as L
from .grid import OccupancyMatrix, Qts, build_qts, labeled_paths

SAT, UNSAT, BOUNDARY = "sat", "unsat", "boundary"


class SignalTooShort(ValueError):
    pass


def steps_of(t: float, dt: float) -> int:
    """Convert a time that must be a multiple of ``dt`` into a step count."""
    k = round(t / dt)
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not a multiple of the step {dt}")
    return int(k)


def window(k: int, t1: float, t2: float, dt: float) -> range:
    """Discrete steps covered by ``[t1, t2)`` when evaluating at step ``k``.

    Shared by the monitor and the MILP encoder.
    """
    return range(k + steps_of(t1, dt), k + steps_of(t2, dt))


@dataclass(frozen=True)
class QtsSignal:
    frames: tuple
    step: float

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("empty signal")
        depths = {q.depth for q in self.frames}
        if len(depths) != 1:
            raise ValueError(f"frames have mixed depths {sorted(depths)}")

    @property
    def last(self) -> int:
        return len(self.frames) - 1

    @classmethod
    def from_occupancies(cls, frames: Sequence[OccupancyMatrix], step: float) -> "QtsSignal":
        return cls(tuple(build_qts(m) for m in frames), step)


# -- TSSL -----------------------------------------------------------------------


def _until_terms(f, q: Qts, v: int, rob):
    """min(rho(right, pi_i), inf_{j<i} rho(left, pi_j)) for all paths and i in (0, k]."""
    for path in labeled_paths(q, v, f.labels, f.bound):
        run = math.inf
        for i in range(1, f.bound + 1):
            run = min(run, rob(f.left, path[i - 1]))
            yield min(rob(f.right, path[i]), run)


def _release_terms(f, q: Qts, v: int, rob):
    """max(rho(right, pi_i), sup_{j<i} rho(left, pi_j)): the negation dual."""
    for path in labeled_paths(q, v, f.labels, f.bound):
        run = -math.inf
        for i in range(1, f.bound + 1):
            run = max(run, rob(f.left, path[i - 1]))
            yield max(rob(f.right, path[i]), run)


def tssl_robustness(phi, q: Qts, v: int | None = None) -> float:
    """Robustness of a TSSL formula at node ``v`` (the root by default)."""
    memo: dict = {}

    def rob(f, v):
        key = (id(f), v)
        r = memo.get(key)
        if r is not None:
            return r
        if isinstance(f, L.TTrue):
            r = 1
        elif isinstance(f, L.Pred):
            mu = q.values[v]
            r = mu - f.c if f.op == L.GE else f.c - mu
        elif isinstance(f, L.TNot):
            r = -rob(f.arg, v)
        elif isinstance(f, L.TAnd):
            r = min(rob(a, v) for a in f.args)
        elif isinstance(f, L.TOr):
            r = max(rob(a, v) for a in f.args)
        elif isinstance(f, L.ExistsNext):
            r = max(rob(f.arg, p[1]) for p in labeled_paths(q, v, f.labels, 1))
        elif isinstance(f, L.ForallNext):
            r = min(rob(f.arg, p[1]) for p in labeled_paths(q, v, f.labels, 1))
        elif isinstance(f, L.ExistsUntil):
            r = max(_until_terms(f, q, v, rob))
        elif isinstance(f, L.ForallUntil):
            r = min(_until_terms(f, q, v, rob))
        elif isinstance(f, L.ExistsRelease):
            r = max(_release_terms(f, q, v, rob))
        elif isinstance(f, L.ForallRelease):
            r = min(_release_terms(f, q, v, rob))
        else:
            raise L.FormulaError(f"not a TSSL formula: {f!r}")
        memo[key] = r
        return r

    return rob(phi, q.root if v is None else v)


# -- SpaTeL ---------------------------------------------------------------------


def required_steps(f, dt: float) -> int:
    return steps_of(L.horizon(f), dt)


def spatel_robustness(f, s: QtsSignal, k: int = 0) -> float:
    if L.is_tssl(f):
        f = L.Spatial(f)
    need = k + required_steps(f, s.step)
    if need > s.last:
        raise SignalTooShort(
            f"formula needs steps {k}..{need} but the signal only covers 0..{s.last} "
            f"(missing {s.last + 1}..{need})"
        )
    dt = s.step
    memo: dict = {}

    def rob(g, k):
        key = (id(g), k)
        r = memo.get(key)
        if r is not None:
            return r
        if isinstance(g, L.Spatial):
            r = tssl_robustness(g.phi, s.frames[k])
        elif isinstance(g, L.Not):
            r = -rob(g.arg, k)
        elif isinstance(g, L.And):
            r = min(rob(a, k) for a in g.args)
        elif isinstance(g, L.Or):
            r = max(rob(a, k) for a in g.args)
        elif isinstance(g, L.Eventually):
            r = max(rob(g.arg, j) for j in window(k, g.t1, g.t2, dt))
        elif isinstance(g, L.Always):
            r = min(rob(g.arg, j) for j in window(k, g.t1, g.t2, dt))
        elif isinstance(g, L.Until):
            r, run = -math.inf, math.inf
            for j in window(k, g.t1, g.t2, dt):
                # inner inf over [k + t1, j) excludes j itself
                r = max(r, min(rob(g.right, j), run))
                run = min(run, rob(g.left, j))
        elif isinstance(g, L.Release):
            r, run = math.inf, -math.inf
            for j in window(k, g.t1, g.t2, dt):
                r = min(r, max(rob(g.right, j), run))
                run = max(run, rob(g.left, j))
        else:
            raise L.FormulaError(f"not a SpaTeL formula: {g!r}")
        memo[key] = r
        return r

    return rob(f, k)


def verdict(rho: float) -> str:
    if rho > 0:
        return SAT
    if rho < 0:
        return UNSAT
    return BOUNDARY


def satisfies(f, s: QtsSignal, k: int = 0) -> str:
    return verdict(spatel_robustness(f, s, k))

"""Mixed-integer encoding of swarm flow dynamics and SpaTeL satisfaction.

Satisfaction of every (sub-formula, node, step) triple is a value ``z`` in
``[0, 1]``. Only predicate ``z``'s are binary; conjunction/disjunction rows
force the composite ones to be 0/1 as well. With a robustness variable
``rho`` every predicate threshold is shifted against ``rho`` so that the
root being satisfied is equivalent to ``robustness >= rho``.

Node valuations are bounded using the fact that a robot moves at most one
cell per step. A predicate whose truth is fixed by those bounds becomes a
constant 0/1 and constants are folded through the Boolean structure; the
remaining predicates get big-M constants sized from the same bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import logic as L
from .grid import GridConfig, OccupancyMatrix, QtsShape, labeled_paths, neighbors, qts_shape
from .milp import BINARY, CONTINUOUS, INTEGER, LinExpr, MilpModel
from .monitor import steps_of, window

EXACT, RELAXED = "exact", "relaxed"


class EncodingError(ValueError):
    pass


@dataclass
class FlowVars:
    size: int
    K: int
    total: int
    f: dict = field(default_factory=dict)  # (k, (i, j), (i2, j2)) -> Var
    n: dict = field(default_factory=dict)  # (k, i, j) -> Var
    integral: bool = True
    initial: OccupancyMatrix | None = None
    capacity: int | None = None

    def edges(self):
        """Directed 4-neighbour edges, cells in row-major order."""
        for i in range(self.size):
            for j in range(self.size):
                for nb in neighbors(self.size, i, j):
                    yield (i, j), nb

    def outflow(self, k: int, cell) -> LinExpr:
        i, j = cell
        return LinExpr.sum(self.f[k, cell, nb] for nb in neighbors(self.size, i, j))

    def inflow(self, k: int, cell) -> LinExpr:
        i, j = cell
        return LinExpr.sum(self.f[k, nb, cell] for nb in neighbors(self.size, i, j))


def encode_dynamics(
    model: MilpModel,
    cfg: GridConfig,
    N0: OccupancyMatrix,
    K: int,
    mode: str = EXACT,
    capacity: int | None = None,
) -> FlowVars:
    if K < 1:
        raise EncodingError(f"K must be >= 1, got {K}")
    if N0.depth != cfg.depth:
        raise EncodingError(f"initial occupancy depth {N0.depth} != grid depth {cfg.depth}")
    if mode not in (EXACT, RELAXED):
        raise EncodingError(f"unknown mode {mode!r}")
    size, N = cfg.size, N0.total
    if capacity is not None and N0.counts.max() > capacity:
        raise EncodingError(f"initial occupancy exceeds the cell capacity {capacity}")
    kind = INTEGER if mode == EXACT else CONTINUOUS
    fv = FlowVars(size, K, N, integral=mode == EXACT, initial=N0, capacity=capacity)
    ncap = N if capacity is None else min(N, capacity)
    for k in range(K + 1):
        for i in range(size):
            for j in range(size):
                if k == 0:
                    v = N0[i, j]
                    fv.n[0, i, j] = model.add_var(f"n_0_{i}_{j}", kind, v, v)
                else:
                    fv.n[k, i, j] = model.add_var(f"n_{k}_{i}_{j}", kind, 0, ncap)
    for k in range(K):
        for (i, j), (a, b) in fv.edges():
            fv.f[k, (i, j), (a, b)] = model.add_var(f"f_{k}_{i}_{j}_{a}_{b}", kind, 0, N)
    for k in range(K):
        for i in range(size):
            for j in range(size):
                out = fv.outflow(k, (i, j))
                model.add_constraint(out <= fv.n[k, i, j], f"cap_{k}_{i}_{j}")
                model.add_constraint(
                    fv.n[k + 1, i, j] == fv.n[k, i, j] - out + fv.inflow(k, (i, j)),
                    f"cons_{k}_{i}_{j}",
                )
    return fv


def occupancy_bounds(shape: QtsShape, flows: FlowVars, v: int, k: int) -> tuple[int, int]:
    """Range of ``mu[v, k]`` over all feasible flow plans.

    A robot can only enter a block from at most ``k`` cells away, and can only
    leave it through a side that is not the workspace border.
    """
    N0, size = flows.initial, flows.size
    i0, j0, s = shape.block[v]
    if N0 is None:
        return 0, flows.total
    if k == 0:
        return sum(N0[c] for c in shape.cells(v)), sum(N0[c] for c in shape.cells(v))
    lo = hi = 0
    for (i, j), cnt in np.ndenumerate(N0.counts):
        if not cnt:
            continue
        di = max(0, i0 - i, i - (i0 + s - 1))
        dj = max(0, j0 - j, j - (j0 + s - 1))
        if di + dj <= k:
            hi += cnt
        if di + dj == 0:
            exits = []
            if i0 > 0:
                exits.append(i - i0 + 1)
            if i0 + s < size:
                exits.append(i0 + s - i)
            if j0 > 0:
                exits.append(j - j0 + 1)
            if j0 + s < size:
                exits.append(j0 + s - j)
            if not exits or min(exits) > k:
                lo += cnt
    if flows.capacity is not None:
        hi = min(hi, flows.capacity * s * s)
    return int(lo), int(hi)


def _atom_range(f, mu: tuple[float, float]) -> tuple[float, float]:
    if isinstance(f, L.TTrue):
        return 1.0, 1.0
    if f.op == L.GE:
        return mu[0] - f.c, mu[1] - f.c
    return f.c - mu[1], f.c - mu[0]


class _Intervals:
    """Robustness intervals of sub-formulas over all feasible flow plans."""

    def __init__(self, shape: QtsShape, flows: FlowVars, dt: float):
        self.shape, self.flows, self.dt = shape, flows, dt
        self.memo: dict = {}

    def tssl(self, f, v: int, k: int) -> tuple[float, float]:
        key = (f, v, k)
        r = self.memo.get(key)
        if r is not None:
            return r
        if isinstance(f, L.TTrue):
            r = (1.0, 1.0)
        elif isinstance(f, L.Pred):
            r = _atom_range(f, occupancy_bounds(self.shape, self.flows, v, k))
        elif isinstance(f, L.TNot):
            a, b = self.tssl(f.arg, v, k)
            r = (-b, -a)
        elif isinstance(f, (L.TAnd, L.TOr)):
            r = _combine([self.tssl(a, v, k) for a in f.args], isinstance(f, L.TAnd))
        elif isinstance(f, (L.ExistsNext, L.ForallNext)):
            rs = [self.tssl(f.arg, p[1], k) for p in labeled_paths(self.shape, v, f.labels, 1)]
            r = _combine(rs, isinstance(f, L.ForallNext))
        elif isinstance(f, L._SpatialUntil):
            release = isinstance(f, (L.ExistsRelease, L.ForallRelease))
            terms = []
            for path in labeled_paths(self.shape, v, f.labels, f.bound):
                for i in range(1, f.bound + 1):
                    parts = [self.tssl(f.right, path[i], k)]
                    parts += [self.tssl(f.left, path[j], k) for j in range(i)]
                    terms.append(_combine(parts, not release))
            outer_min = isinstance(f, (L.ForallUntil, L.ForallRelease))
            r = _combine(terms, outer_min)
        else:
            raise EncodingError(f"not a TSSL formula: {f!r}")
        self.memo[key] = r
        return r

    def spatel(self, g, k: int) -> tuple[float, float]:
        key = (g, None, k)
        r = self.memo.get(key)
        if r is not None:
            return r
        dt = self.dt
        if isinstance(g, L.Spatial):
            r = self.tssl(g.phi, 0, k)
        elif L.is_tssl(g):
            r = self.tssl(g, 0, k)
        elif isinstance(g, L.Not):
            a, b = self.spatel(g.arg, k)
            r = (-b, -a)
        elif isinstance(g, (L.And, L.Or)):
            r = _combine([self.spatel(a, k) for a in g.args], isinstance(g, L.And))
        elif isinstance(g, (L.Eventually, L.Always)):
            r = _combine([self.spatel(g.arg, j) for j in window(k, g.t1, g.t2, dt)],
                         isinstance(g, L.Always))
        elif isinstance(g, (L.Until, L.Release)):
            release = isinstance(g, L.Release)
            terms, before = [], []
            for j in window(k, g.t1, g.t2, dt):
                terms.append(_combine([self.spatel(g.right, j)] + before, not release))
                before = before + [self.spatel(g.left, j)]
            r = _combine(terms, release)
        else:
            raise EncodingError(f"not a SpaTeL formula: {g!r}")
        self.memo[key] = r
        return r


def _combine(rs, use_min: bool) -> tuple[float, float]:
    if use_min:
        return min(a for a, _ in rs), min(b for _, b in rs)
    return max(a for a, _ in rs), max(b for _, b in rs)


def big_m(total: int, phi, robust: bool) -> float:
    """Uniform big-M that dominates every predicate slack.

    Without ``rho`` a slack ``mu - c`` lies in ``[-(N + c_max), N + c_max]``;
    ``rho`` itself lives in ``[-R, R]`` with ``R = N + c_max + 1`` and adds up to
    ``R`` more.
    """
    c_max = max((abs(c) for c in L.thresholds(phi)), default=0.0)
    base = total + c_max + 1
    return base + rho_bound(total, phi) if robust else base


def rho_bound(total: int, phi) -> float:
    c_max = max((abs(c) for c in L.thresholds(phi)), default=0.0)
    return total + c_max + 1


@dataclass
class EncodedFormula:
    z: dict  # (formula, node, step) -> Var, LinExpr or a 0/1 constant
    root: object
    rho: object | None
    M: float | None
    n_binary: int = 0
    n_continuous: int = 0
    n_folded: int = 0


class _Encoder:
    def __init__(self, model: MilpModel, flows: FlowVars, shape: QtsShape, dt: float,
                 M: float | None, rho=None, aux_valuations: bool = False):
        self.model = model
        self.flows = flows
        self.shape = shape
        self.dt = dt
        self.M = M  # None: per-predicate constants from the bounds
        self.rho = rho
        if rho is not None:
            info = model.variables[rho.index]
            self.rho_range = (info.lb, info.ub)
        self.aux = aux_valuations
        self.z: dict = {}
        self._pred_z: dict = {}
        self._terms: dict = {}
        self._mu: dict = {}
        self.count = 0
        self.n_binary = 0
        self.n_continuous = 0
        self.n_folded = 0

    # -- variables ---------------------------------------------------------------

    def _new(self, kind) -> object:
        self.count += 1
        if kind == BINARY:
            self.n_binary += 1
        else:
            self.n_continuous += 1
        return self.model.add_var(f"z{self.count}", kind, 0, 1)

    def mu(self, v: int, k: int) -> LinExpr:
        key = (v, k)
        e = self._mu.get(key)
        if e is not None:
            return e
        kids = self.shape.children[v]
        if not kids:
            i, j, _ = self.shape.block[v]
            e = LinExpr.of(self.flows.n[k, i, j])
        elif self.aux:
            var = self.model.add_var(f"mu_{k}_{v}", CONTINUOUS, 0, self.flows.total)
            self.model.add_constraint(
                var == LinExpr.sum(self.mu(c, k) for c in kids.values()), f"mudef_{k}_{v}"
            )
            e = LinExpr.of(var)
        else:
            e = LinExpr.sum(self.flows.n[k, i, j] for i, j in self.shape.cells(v))
        self._mu[key] = e
        return e

    # -- boolean glue -------------------------------------------------------------

    def conj(self, zs: list):
        if any(isinstance(z, int) and z == 0 for z in zs):
            return 0
        zs = _dedup([z for z in zs if not isinstance(z, int)])
        if not zs:
            return 1
        if len(zs) == 1:
            return zs[0]
        z = self._new(CONTINUOUS)
        for zi in zs:
            self.model.add_constraint(z <= zi)
        self.model.add_constraint(z >= LinExpr.sum(zs) - (len(zs) - 1))
        return z

    def disj(self, zs: list):
        if any(isinstance(z, int) and z == 1 for z in zs):
            return 1
        zs = _dedup([z for z in zs if not isinstance(z, int)])
        if not zs:
            return 0
        if len(zs) == 1:
            return zs[0]
        z = self._new(CONTINUOUS)
        for zi in zs:
            self.model.add_constraint(z >= zi)
        self.model.add_constraint(z <= LinExpr.sum(zs))
        return z

    # -- predicates ------------------------------------------------------------------

    def predicate(self, f, v: int, k: int, negated: bool):
        """z of an atom (binary, or a folded 0/1); ``negated`` picks the tightening direction."""
        if isinstance(f, L.TTrue):
            key = ("true", negated, k)
        else:
            key = (f, negated, v, k)
        z = self._pred_z.get(key)
        if z is not None:
            return z
        if isinstance(f, L.TTrue):
            value, c, ge = LinExpr.of(1.0), 0.0, True
            lo, hi = 1.0, 1.0
        else:
            value, c, ge = self.mu(v, k), f.c, f.op == L.GE
            lo, hi = _atom_range(f, occupancy_bounds(self.shape, self.flows, v, k))
        # robustness of the atom is (value - c) for >=, (c - value) for <=
        slack = value - c if ge else c - value
        if self.rho is not None:
            rlo, rhi = self.rho_range
            # non-increasing sites lose rho; a negated site is tightened the other way
            if negated:
                slack = slack + self.rho
                lo, hi = lo + rlo, hi + rhi
            else:
                slack = slack - self.rho
                lo, hi = lo - rhi, hi - rlo
        if hi < 0:
            z = 0
        elif lo > 0:
            z = 1
        else:
            z = None
        if z is not None:
            self.n_folded += 1
            self._pred_z[key] = z
            return z
        z = self._new(BINARY)
        m_up = hi if self.M is None else self.M
        m_down = -lo if self.M is None else self.M
        self.model.add_constraint(slack <= m_up * z)
        self.model.add_constraint(slack >= -m_down * (1 - z))
        self._pred_z[key] = z
        return z

    # -- TSSL -------------------------------------------------------------------------

    def tssl(self, f, v: int, k: int):
        key = (f, v, k)
        z = self.z.get(key)
        if z is not None:
            return z
        if isinstance(f, (L.Pred, L.TTrue)):
            z = self.predicate(f, v, k, negated=False)
        elif isinstance(f, L.TNot):
            if not isinstance(f.arg, (L.Pred, L.TTrue)):
                raise EncodingError("negation above a composite formula; convert to NNF first")
            zp = self.predicate(f.arg, v, k, negated=True)
            z = 1 - zp if isinstance(zp, int) else 1 - LinExpr.of(zp)
        elif isinstance(f, L.TAnd):
            z = self.conj([self.tssl(a, v, k) for a in f.args])
        elif isinstance(f, L.TOr):
            z = self.disj([self.tssl(a, v, k) for a in f.args])
        elif isinstance(f, (L.ExistsNext, L.ForallNext)):
            zs = [self.tssl(f.arg, p[1], k) for p in labeled_paths(self.shape, v, f.labels, 1)]
            z = self.disj(zs) if isinstance(f, L.ExistsNext) else self.conj(zs)
        elif isinstance(f, (L.ExistsUntil, L.ForallUntil)):
            terms = self._until_terms(f, v, k, release=False)
            z = self.disj(terms) if isinstance(f, L.ExistsUntil) else self.conj(terms)
        elif isinstance(f, (L.ExistsRelease, L.ForallRelease)):
            terms = self._until_terms(f, v, k, release=True)
            z = self.disj(terms) if isinstance(f, L.ExistsRelease) else self.conj(terms)
        else:
            raise EncodingError(f"not a TSSL formula: {f!r}")
        self.z[key] = z
        return z

    def _until_terms(self, f, v: int, k: int, release: bool):
        """One term per (path prefix, i): right at pi_i combined with left on pi_0..pi_{i-1}."""
        out = []
        seen = set()
        for path in labeled_paths(self.shape, v, f.labels, f.bound):
            for i in range(1, f.bound + 1):
                prefix = path.prefix(i)
                if prefix in seen:
                    continue
                seen.add(prefix)
                key = (f, release, prefix, k)
                t = self._terms.get(key)
                if t is None:
                    parts = [self.tssl(f.right, prefix[i], k)]
                    parts += [self.tssl(f.left, prefix[j], k) for j in range(i)]
                    t = self.disj(parts) if release else self.conj(parts)
                    self._terms[key] = t
                out.append(t)
        return out

    # -- SpaTeL -----------------------------------------------------------------------

    def spatel(self, g, k: int):
        key = (g, 0, k)
        z = self.z.get(key)
        if z is not None:
            return z
        dt = self.dt
        if isinstance(g, L.Spatial):
            z = self.tssl(g.phi, 0, k)
        elif L.is_tssl(g):
            z = self.tssl(g, 0, k)
        elif isinstance(g, L.Not):
            raise EncodingError("negation above a temporal formula; convert to NNF first")
        elif isinstance(g, L.And):
            z = self.conj([self.spatel(a, k) for a in g.args])
        elif isinstance(g, L.Or):
            z = self.disj([self.spatel(a, k) for a in g.args])
        elif isinstance(g, L.Eventually):
            z = self.disj([self.spatel(g.arg, j) for j in window(k, g.t1, g.t2, dt)])
        elif isinstance(g, L.Always):
            z = self.conj([self.spatel(g.arg, j) for j in window(k, g.t1, g.t2, dt)])
        elif isinstance(g, (L.Until, L.Release)):
            release = isinstance(g, L.Release)
            terms, before = [], []
            for j in window(k, g.t1, g.t2, dt):
                # the left operand ranges over [k + t1, j), j itself excluded
                parts = [self.spatel(g.right, j)] + before
                terms.append(self.disj(parts) if release else self.conj(parts))
                before = before + [self.spatel(g.left, j)]
            z = self.conj(terms) if release else self.disj(terms)
        else:
            raise EncodingError(f"not a SpaTeL formula: {g!r}")
        self.z[key] = z
        return z


def _dedup(zs):
    out, seen = [], set()
    for z in zs:
        key = ("v", z.index) if hasattr(z, "index") else ("e", id(z))
        if key not in seen:
            seen.add(key)
            out.append(z)
    return out


def _check(phi, flows: FlowVars, dt: float, k: int):
    if not L.is_nnf(phi):
        raise EncodingError("formula is not in negation normal form")
    need = k + steps_of(L.horizon(phi), dt)
    if need > flows.K:
        raise EncodingError(f"formula horizon needs step {need} but only {flows.K} steps are encoded")


def _pin(model: MilpModel, root):
    if isinstance(root, int):
        # folded root: a constant 1 needs nothing, a constant 0 is an infeasible row
        if root == 0:
            model.add_constraint(LinExpr() == 1, "pin_root")
        return
    model.add_constraint(LinExpr.of(root) == 1, "pin_root")


def encode_formula(
    model: MilpModel,
    phi,
    flows: FlowVars,
    dt: float,
    M: float | None = None,
    k: int = 0,
    aux_valuations: bool = False,
    pin: bool = False,
) -> EncodedFormula:
    """Satisfaction encoding without robustness tightening.

    ``M=None`` sizes each predicate's big-M from the valuation bounds; an
    explicit ``M`` is used uniformly and must be at least ``N + c_max + 1``.
    """
    _check(phi, flows, dt, k)
    depth = int(round(math.log2(flows.size)))
    if M is not None:
        need = big_m(flows.total, phi, robust=False)
        if M < need:
            raise EncodingError(f"M = {M} is too small; need at least N + c_max + 1 = {need}")
    enc = _Encoder(model, flows, qts_shape(depth), dt, M, None, aux_valuations)
    root = enc.spatel(phi, k)
    if pin:
        _pin(model, root)
    return EncodedFormula(enc.z, root, None, M, enc.n_binary, enc.n_continuous, enc.n_folded)


def encode_robustness(
    model: MilpModel,
    phi,
    flows: FlowVars,
    dt: float,
    sites: list | None = None,
    k: int = 0,
    M: float | None = None,
    aux_valuations: bool = False,
    pin: bool = True,
    rho_lb: float | None = None,
    rho_integer: bool = False,
) -> EncodedFormula:
    """Encoding with every threshold shifted by a shared continuous ``rho``.

    The predicate tightening direction follows each site's polarity, which for
    an NNF formula is fixed by the operator and whether a negation sits above
    it. ``sites`` (from :func:`logic.predicate_sites`) is only cross-checked.
    ``rho`` is bounded by the robustness range any signal can reach, and from
    below by ``rho_lb`` when given. ``rho_integer`` declares it integer, which
    loses nothing when occupancies and thresholds are integers (robustness
    is then an integer too) and lets branch-and-bound round its bounds.
    """
    _check(phi, flows, dt, k)
    if sites is not None:
        expected = L.predicate_sites(phi)
        if list(sites) != expected:
            raise EncodingError("predicate sites do not belong to this formula")
    R = rho_bound(flows.total, phi)
    depth = int(round(math.log2(flows.size)))
    rlo, rhi = _Intervals(qts_shape(depth), flows, dt).spatel(phi, k)
    lb = max(-R, rlo) if rho_lb is None else max(-R, rho_lb)
    ub = min(R, rhi)
    if M is not None:
        need = big_m(flows.total, phi, robust=True)
        if M < need:
            raise EncodingError(f"M = {M} is too small; need at least {need} with rho")
    kind = CONTINUOUS
    if rho_integer:
        if not all(float(c).is_integer() for c in L.thresholds(phi)):
            raise EncodingError("an integer rho needs integer thresholds")
        kind = INTEGER
        lb, ub = math.ceil(lb - 1e-9), math.floor(ub + 1e-9)
    if lb > ub:
        rho = model.add_var("rho", kind, lb, lb)
        model.add_constraint(rho <= ub, "rho_cap")
    else:
        rho = model.add_var("rho", kind, lb, ub)
    enc = _Encoder(model, flows, qts_shape(depth), dt, M, rho, aux_valuations)
    root = enc.spatel(phi, k)
    if pin:
        _pin(model, root)
    return EncodedFormula(enc.z, root, rho, M, enc.n_binary, enc.n_continuous, enc.n_folded)

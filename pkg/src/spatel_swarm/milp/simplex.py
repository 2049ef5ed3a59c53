"""Bounded-variable revised simplex.

Solves ``min c x`` subject to ``A x (<=,>=,==) b`` and ``lo <= x <= hi``.
Every row gets a logical column ``s`` with ``A x + s = b``; its bounds encode
the row sense. A second unit column per row is an artificial used only by
the phase-one start.

The basis is held as a sparse LU factorization followed by a product-form
eta file, refactored periodically. The primal method uses Dantzig pricing
with a Harris-style ratio test and falls back to Bland's rule after a run
of degenerate pivots; the dual method re-optimizes after bound changes,
which is how branch-and-bound nodes are warm-started.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
CUTOFF = "cutoff"
ITERATION_LIMIT = "iteration_limit"

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-7
REFACTOR_EVERY = 64
DEGENERATE_RUN = 50


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


@dataclass
class Basis:
    head: np.ndarray
    at_upper: np.ndarray


class SingularBasis(ArithmeticError):
    pass


class BasisFactor:
    """``B^-1`` as ``E_k ... E_1 (LU)^-1``; each eta replaces one basis column."""

    def __init__(self, B: sp.csc_matrix):
        self.m = B.shape[0]
        try:
            self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise SingularBasis(str(exc)) from None
        self.etas: list = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self.lu.solve(a)
        for r, idx, vals, piv in self.etas:
            xr = x[r] / piv
            if xr != 0.0:
                x[idx] -= vals * xr
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        y = np.array(c, dtype=float)
        for r, idx, vals, piv in reversed(self.etas):
            y[r] = (y[r] - y[idx] @ vals) / piv
        return self.lu.solve(y, trans="T")

    def update(self, r: int, alpha: np.ndarray):
        idx = np.flatnonzero(alpha)
        idx = idx[idx != r]
        self.etas.append((r, idx, alpha[idx].copy(), float(alpha[r])))


class SimplexLP:
    def __init__(self, A, sense, rhs, lo, hi, cost):
        A = sp.csc_matrix(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.A = A
        self.At = sp.csr_matrix(A.T)
        self.b = np.asarray(rhs, dtype=float)
        slo = np.zeros(m)
        shi = np.zeros(m)
        for i, s in enumerate(sense):
            if s == "<=":
                shi[i] = math.inf
            elif s == ">=":
                slo[i] = -math.inf
            elif s != "==":
                raise ValueError(f"unknown row sense {s!r}")
        self.total = n + 2 * m
        self.lo = np.concatenate([np.asarray(lo, float), slo, np.zeros(m)])
        self.hi = np.concatenate([np.asarray(hi, float), shi, np.zeros(m)])
        self.cost = np.concatenate([np.asarray(cost, float), np.zeros(2 * m)])
        self.art_sign = np.ones(m)
        self.x = np.zeros(self.total)
        self.head = np.zeros(m, dtype=np.int64)
        self.is_basic = np.zeros(self.total, dtype=bool)
        self.at_upper = np.zeros(self.total, dtype=bool)
        self.factor = None
        self._full = None
        self.iterations = 0
        self.since_refactor = 0
        self.has_basis = False

    # -- column algebra ---------------------------------------------------

    def column(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            col = np.zeros(m)
            s, e = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[s:e]] = self.A.data[s:e]
            return col
        col = np.zeros(m)
        if j < n + m:
            col[j - n] = 1.0
        else:
            col[j - n - m] = self.art_sign[j - n - m]
        return col

    def row_times_columns(self, w: np.ndarray) -> np.ndarray:
        """``w @ [A | I | diag(art_sign)]`` for a row vector ``w``."""
        return np.concatenate([self.At @ w, w, w * self.art_sign])

    def _basic_matrix(self) -> sp.csc_matrix:
        if self._full is None:
            self._full = sp.hstack(
                [self.A, sp.identity(self.m, format="csc"), sp.diags(self.art_sign, format="csc")],
                format="csc",
            )
        return self._full[:, self.head]

    def _nonbasic_value(self, j: int) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if self.at_upper[j] and math.isfinite(hi):
            return hi
        if math.isfinite(lo):
            return lo
        if math.isfinite(hi):
            return hi
        return 0.0

    def _recompute_primal(self):
        nb = ~self.is_basic
        fin_lo, fin_hi = np.isfinite(self.lo), np.isfinite(self.hi)
        at_hi = fin_hi & (self.at_upper | ~fin_lo)
        val = np.where(at_hi, self.hi, np.where(fin_lo, self.lo, 0.0))
        self.x[nb] = val[nb]
        xn = np.where(nb, self.x, 0.0)
        n, m = self.n, self.m
        r = self.b - self.A @ xn[:n] - xn[n:n + m] - self.art_sign * xn[n + m:]
        self.x[self.head] = self.factor.ftran(r)

    def refactor(self):
        self.factor = BasisFactor(self._basic_matrix())
        self._recompute_primal()
        self.since_refactor = 0

    def _pivot(self, q: int, r: int, alpha: np.ndarray, delta: float, leave_upper: bool):
        """Enter ``q`` changing it by ``delta``; ``head[r]`` leaves at a bound."""
        self.x[self.head] -= delta * alpha
        self.x[q] += delta
        p = self.head[r]
        self.x[p] = self.hi[p] if leave_upper else self.lo[p]
        self.is_basic[p] = False
        self.at_upper[p] = leave_upper
        self.is_basic[q] = True
        self.at_upper[q] = False
        self.head[r] = q
        self.factor.update(r, alpha)
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            try:
                self.refactor()
            except SingularBasis:
                pass  # keep going on the eta file

    def objective(self) -> float:
        return float(self.cost[: self.n] @ self.x[: self.n])

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        y = self.factor.btran(cost[self.head])
        return cost - self.row_times_columns(y)

    # -- starts -------------------------------------------------------------

    def cold_start(self):
        """Slack/artificial basis with structurals at a finite bound."""
        n, m = self.n, self.m
        self.is_basic[:] = False
        self.at_upper[:] = False
        for j in range(n):
            if not math.isfinite(self.lo[j]) and math.isfinite(self.hi[j]):
                self.at_upper[j] = True
            self.x[j] = self._nonbasic_value(j)
        r = self.b - self.A @ self.x[:n]
        self.hi[n + m:] = 0.0
        self.art_sign[:] = 1.0
        self._full = None
        for i in range(m):
            s = n + i
            lo, hi = self.lo[s], self.hi[s]
            if lo - PRIMAL_TOL <= r[i] <= hi + PRIMAL_TOL:
                self.head[i] = s
                self.x[s] = r[i]
                self.x[n + m + i] = 0.0
            else:
                clamp = lo if r[i] < lo else hi
                self.x[s] = clamp
                self.at_upper[s] = clamp == hi and math.isfinite(hi)
                a = n + m + i
                self.art_sign[i] = 1.0 if r[i] > clamp else -1.0
                self.hi[a] = math.inf
                self.head[i] = a
                self.x[a] = abs(r[i] - clamp)
        self.is_basic[self.head] = True
        self.factor = BasisFactor(self._basic_matrix())
        self.since_refactor = 0
        self.has_basis = True

    def basis(self) -> Basis:
        return Basis(self.head.copy(), self.at_upper.copy())

    def load_basis(self, basis: Basis) -> bool:
        self.head[:] = basis.head
        self.is_basic[:] = False
        self.is_basic[self.head] = True
        self.at_upper[:] = basis.at_upper
        try:
            self.refactor()
        except SingularBasis:
            self.has_basis = False
            return False
        self.has_basis = True
        return True

    # -- primal simplex -------------------------------------------------------

    def _movement(self):
        """Which nonbasic columns may increase / decrease from where they sit."""
        fin_lo, fin_hi = np.isfinite(self.lo), np.isfinite(self.hi)
        at_hi = fin_hi & (self.at_upper | ~fin_lo)
        at_lo = fin_lo & ~at_hi
        free = ~fin_lo & ~fin_hi
        movable = ~self.is_basic & (self.hi > self.lo)
        return movable & (at_lo | free), movable & (at_hi | free)

    def _entering(self, d: np.ndarray, bland: bool) -> tuple[int, int]:
        can_up, can_down = self._movement()
        up = can_up & (d < -DUAL_TOL)
        down = can_down & (d > DUAL_TOL)
        score = np.where(up, -d, 0.0) + np.where(down, d, 0.0)
        if not score.any():
            return -1, 0
        q = int(np.flatnonzero(score)[0]) if bland else int(np.argmax(score))
        return q, (1 if up[q] else -1)

    def _primal_ratio(self, q: int, direction: int, alpha: np.ndarray, bland: bool):
        xb = self.x[self.head]
        lob = self.lo[self.head]
        hib = self.hi[self.head]
        da = direction * alpha
        dec = da > PIVOT_TOL
        inc = da < -PIVOT_TOL
        with np.errstate(divide="ignore", invalid="ignore"):
            t_dec = np.where(dec & np.isfinite(lob), (xb - lob) / da, np.inf)
            t_inc = np.where(inc & np.isfinite(hib), (hib - xb) / -da, np.inf)
            relaxed = np.minimum(
                np.where(dec & np.isfinite(lob), (xb - lob + PRIMAL_TOL) / da, np.inf),
                np.where(inc & np.isfinite(hib), (hib - xb + PRIMAL_TOL) / -da, np.inf),
            )
        t = np.maximum(np.minimum(t_dec, t_inc), 0.0)
        t_flip = self.hi[q] - self.lo[q]
        bound = relaxed.min() if relaxed.size else np.inf
        if not math.isfinite(bound) and not math.isfinite(t_flip):
            return None, math.inf, False
        if t_flip <= bound:
            return -1, t_flip, False
        cand = np.flatnonzero(t <= bound)
        if bland:
            r = int(cand[np.argmin(self.head[cand])])
        else:
            r = int(cand[np.argmax(np.abs(alpha[cand]))])
        return r, float(t[r]), bool(inc[r])

    def primal(self, cost: np.ndarray, max_iter: int = 100000, deadline: float | None = None) -> str:
        import time

        degenerate = 0
        for _ in range(max_iter):
            if deadline is not None and time.monotonic() > deadline:
                return ITERATION_LIMIT
            d = self.reduced_costs(cost)
            bland = degenerate >= DEGENERATE_RUN
            q, direction = self._entering(d, bland)
            if q < 0:
                return OPTIMAL
            alpha = self.factor.ftran(self.column(q))
            r, t, leave_upper = self._primal_ratio(q, direction, alpha, bland)
            if r is None:
                return UNBOUNDED
            degenerate = degenerate + 1 if t <= 1e-12 else 0
            delta = direction * t
            if r < 0:
                self.x[self.head] -= delta * alpha
                self.at_upper[q] = not self.at_upper[q]
                self.x[q] = self._nonbasic_value(q)
                self.iterations += 1
                continue
            self._pivot(q, r, alpha, delta, leave_upper)
        return ITERATION_LIMIT

    # -- dual simplex ---------------------------------------------------------------

    def make_dual_feasible(self, cost: np.ndarray) -> bool:
        """Flip boxed nonbasics to the bound their reduced cost prefers."""
        d = self.reduced_costs(cost)
        nb = ~self.is_basic & (self.hi > self.lo)
        fin_lo, fin_hi = np.isfinite(self.lo), np.isfinite(self.hi)
        want_up = nb & (d < -DUAL_TOL)
        want_down = nb & (d > DUAL_TOL)
        if (want_up & ~fin_hi).any() or (want_down & ~fin_lo).any():
            return False
        changed = (want_up & ~self.at_upper) | (want_down & self.at_upper)
        if changed.any():
            self.at_upper[want_up] = True
            self.at_upper[want_down] = False
            self._recompute_primal()
        return True

    def dual(self, cost: np.ndarray, cutoff: float = math.inf, max_iter: int = 100000,
             deadline: float | None = None) -> str:
        import time

        for it in range(max_iter):
            if deadline is not None and time.monotonic() > deadline:
                return ITERATION_LIMIT
            xb = self.x[self.head]
            lob = self.lo[self.head]
            hib = self.hi[self.head]
            below = lob - xb
            above = xb - hib
            infeas = np.maximum(below, above)
            r = int(np.argmax(infeas))
            if infeas[r] <= PRIMAL_TOL:
                return OPTIMAL
            if cutoff < math.inf and float(cost @ self.x) > cutoff:
                return CUTOFF
            to_lower = below[r] > above[r]
            target = lob[r] if to_lower else hib[r]
            e = np.zeros(self.m)
            e[r] = 1.0
            alpha_r = self.row_times_columns(self.factor.btran(e))
            d = self.reduced_costs(cost)
            can_up, can_down = self._movement()
            if to_lower:  # x_r must increase
                elig = (can_up & (alpha_r < -PIVOT_TOL)) | (can_down & (alpha_r > PIVOT_TOL))
            else:
                elig = (can_up & (alpha_r > PIVOT_TOL)) | (can_down & (alpha_r < -PIVOT_TOL))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return INFEASIBLE
            a = np.abs(alpha_r[cand])
            ratios = np.abs(d[cand]) / a
            bound = ((np.abs(d[cand]) + DUAL_TOL) / a).min()
            near = cand[ratios <= bound]
            q = int(near[np.argmax(np.abs(alpha_r[near]))])
            alpha = self.factor.ftran(self.column(q))
            if abs(alpha[r]) < PIVOT_TOL:
                self.refactor()
                continue
            delta = (self.x[self.head[r]] - target) / alpha[r]
            self._pivot(q, r, alpha, delta, leave_upper=not to_lower)
        return ITERATION_LIMIT

    # -- drivers ------------------------------------------------------------------------

    def structural(self) -> np.ndarray:
        return self.x[: self.n].copy()

    def solve_cold(self, deadline: float | None = None) -> LPResult:
        n, m = self.n, self.m
        self.cold_start()
        it0 = self.iterations
        if self.hi[n + m:].any():
            phase1 = np.zeros(self.total)
            phase1[n + m:] = 1.0
            status = self.primal(phase1, deadline=deadline)
            if status == ITERATION_LIMIT:
                return LPResult(status, None, math.nan, self.iterations - it0)
            if float(self.x[n + m:].sum()) > PHASE1_TOL * max(1.0, np.abs(self.b).max(initial=0.0)):
                return LPResult(INFEASIBLE, None, math.nan, self.iterations - it0)
            self.hi[n + m:] = 0.0
            self.x[n + m:][~self.is_basic[n + m:]] = 0.0
        status = self.primal(self.cost, deadline=deadline)
        if status != OPTIMAL:
            return LPResult(status, None, math.nan, self.iterations - it0)
        return LPResult(OPTIMAL, self.structural(), self.objective(), self.iterations - it0)

    def solve_warm(self, cutoff: float = math.inf, deadline: float | None = None) -> LPResult:
        """Re-optimize from the current basis after bound changes."""
        it0 = self.iterations
        self._recompute_primal()
        if not self.make_dual_feasible(self.cost):
            return self.solve_cold(deadline)
        status = self.dual(self.cost, cutoff=cutoff, deadline=deadline)
        if status == OPTIMAL:
            # polish residual dual infeasibilities left by round-off
            status = self.primal(self.cost, deadline=deadline)
        if status == OPTIMAL:
            return LPResult(OPTIMAL, self.structural(), self.objective(), self.iterations - it0)
        return LPResult(status, None, math.nan, self.iterations - it0)

    def set_structural_bounds(self, lo: np.ndarray, hi: np.ndarray):
        self.lo[: self.n] = lo
        self.hi[: self.n] = hi


def solve_lp(A, sense, rhs, lo, hi, cost) -> LPResult:
    return SimplexLP(A, sense, rhs, lo, hi, cost).solve_cold()

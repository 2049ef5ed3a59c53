from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

CONTINUOUS, BINARY, INTEGER = "continuous", "binary", "integer"
KINDS = (CONTINUOUS, BINARY, INTEGER)
LE, GE, EQ = "<=", ">=", "=="

FEAS_TOL = 1e-6
INT_TOL = 1e-6

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
# LP-file keywords; external readers choke on them as identifiers
_RESERVED = {
    "free", "inf", "infinity", "end", "bound", "bounds", "bin", "binary", "binaries",
    "gen", "general", "generals", "st", "subject", "minimize", "minimise", "maximize",
    "maximise", "min", "max", "semi", "semis", "semi-continuous", "sos",
}


class MilpError(Exception):
    pass


class SealedModelError(MilpError):
    pass


class Var:
    __slots__ = ("model", "index", "name")

    def __init__(self, model, index, name):
        self.model = model
        self.index = index
        self.name = name

    def _expr(self):
        return LinExpr({self.index: 1.0})

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return other - self._expr()

    def __mul__(self, k):
        return self._expr() * k

    __rmul__ = __mul__

    def __neg__(self):
        return self._expr() * -1

    def __le__(self, other):
        return self._expr() <= other

    def __ge__(self, other):
        return self._expr() >= other

    def __eq__(self, other):
        return self._expr() == other

    __hash__ = object.__hash__

    def __repr__(self):
        return f"Var({self.name})"


class LinExpr:
    """Sparse linear expression ``sum(coef * var) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = dict(terms or {})
        self.const = float(const)

    @staticmethod
    def of(x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, Var):
            return x._expr()
        if isinstance(x, (int, float, np.integer, np.floating)):
            return LinExpr(const=float(x))
        raise TypeError(f"cannot use {type(x).__name__} in a linear expression")

    @staticmethod
    def sum(items) -> "LinExpr":
        out = LinExpr()
        for x in items:
            out.iadd(x)
        return out

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def iadd(self, other, k: float = 1.0) -> "LinExpr":
        if isinstance(other, Var):
            self.terms[other.index] = self.terms.get(other.index, 0.0) + k
            return self
        other = LinExpr.of(other)
        for i, c in other.terms.items():
            self.terms[i] = self.terms.get(i, 0.0) + k * c
        self.const += k * other.const
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return LinExpr.of(other).copy().iadd(self, -1.0)

    def __mul__(self, k):
        if not isinstance(k, (int, float, np.integer, np.floating)):
            raise TypeError("only scalar multiplication is linear")
        return LinExpr({i: c * k for i, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __le__(self, other):
        return Constraint.build(self, LE, other)

    def __ge__(self, other):
        return Constraint.build(self, GE, other)

    def __eq__(self, other):
        return Constraint.build(self, EQ, other)

    __hash__ = None

    def value(self, x) -> float:
        return self.const + sum(c * x[i] for i, c in self.terms.items())


@dataclass
class Constraint:
    terms: dict
    sense: str
    rhs: float
    name: str | None = None

    @staticmethod
    def build(lhs, sense, rhs) -> "Constraint":
        e = LinExpr.of(lhs) - LinExpr.of(rhs)
        terms = {i: c for i, c in e.terms.items() if c != 0.0}
        return Constraint(terms, sense, -e.const)


@dataclass
class VarInfo:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass
class MilpModel:
    name: str = "model"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_constant: float = 0.0
    sealed: bool = False

    def __post_init__(self):
        self._by_name: dict[str, int] = {}
        self._con_names: set[str] = set()

    def _check_open(self):
        if self.sealed:
            raise SealedModelError(f"model {self.name!r} is sealed")

    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> Var:
        self._check_open()
        if kind not in KINDS:
            raise MilpError(f"unknown variable kind {kind!r}")
        if not _NAME.fullmatch(name) or re.match(r"[eE][0-9+\-]", name) or name.lower() in _RESERVED:
            raise MilpError(f"invalid variable name {name!r}")
        if name in self._by_name:
            raise MilpError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise MilpError(f"variable {name!r} has empty bounds [{lb}, {ub}]")
        idx = len(self.variables)
        self.variables.append(VarInfo(name, kind, float(lb), float(ub)))
        self._by_name[name] = idx
        return Var(self, idx, name)

    def var(self, name: str) -> Var:
        try:
            return Var(self, self._by_name[name], name)
        except KeyError:
            raise MilpError(f"unknown variable {name!r}") from None

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def index(self, name: str) -> int:
        return self._by_name[name]

    def _resolve(self, x):
        """Accept Var/LinExpr/Constraint bound to this model, or terms keyed by name."""
        if isinstance(x, dict):
            out = {}
            for k, c in x.items():
                if isinstance(k, str):
                    if k not in self._by_name:
                        raise MilpError(f"unknown variable {k!r}")
                    k = self._by_name[k]
                out[k] = out.get(k, 0.0) + float(c)
            return out
        return x

    def add_constraint(self, con: Constraint, name: str | None = None) -> str:
        self._check_open()
        if not isinstance(con, Constraint):
            raise MilpError("add_constraint expects a Constraint (build one with <=, >= or ==)")
        terms = self._resolve(con.terms)
        for i in terms:
            if not (0 <= i < len(self.variables)):
                raise MilpError(f"constraint references undeclared variable index {i}")
        if name is None:
            name = f"c{len(self.constraints)}"
        if name in self._con_names:
            raise MilpError(f"duplicate constraint name {name!r}")
        if not _NAME.fullmatch(name):
            raise MilpError(f"invalid constraint name {name!r}")
        self._con_names.add(name)
        self.constraints.append(Constraint(terms, con.sense, float(con.rhs), name))
        return name

    def set_objective(self, expr, sense: str = "minimize"):
        self._check_open()
        if sense != "minimize":
            raise MilpError("only minimization is supported; negate the objective")
        if isinstance(expr, dict):
            self.objective = {i: c for i, c in self._resolve(expr).items() if c != 0.0}
            self.objective_constant = 0.0
            return
        e = LinExpr.of(expr)
        self.objective = {i: c for i, c in e.terms.items() if c != 0.0}
        self.objective_constant = e.const

    def set_bounds(self, var: Var | str, lb: float | None = None, ub: float | None = None):
        self._check_open()
        idx = var.index if isinstance(var, Var) else self._by_name[var]
        info = self.variables[idx]
        if lb is not None:
            info.lb = float(lb)
        if ub is not None:
            info.ub = float(ub)
        if info.lb > info.ub:
            raise MilpError(f"variable {info.name!r} has empty bounds [{info.lb}, {info.ub}]")

    def seal(self) -> "MilpModel":
        self.sealed = True
        return self

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def integer_mask(self) -> np.ndarray:
        return np.array([v.kind != CONTINUOUS for v in self.variables], dtype=bool)

    def arrays(self):
        """Dense bounds/cost vectors and a CSR constraint matrix."""
        n, m = self.num_vars, self.num_constraints
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            for i, c in con.terms.items():
                rows.append(r)
                cols.append(i)
                vals.append(c)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        sense = np.array([c.sense for c in self.constraints], dtype=object)
        rhs = np.array([c.rhs for c in self.constraints], dtype=float)
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        cost = np.zeros(n)
        for i, c in self.objective.items():
            cost[i] = c
        return A, sense, rhs, lb, ub, cost

    def objective_value(self, x) -> float:
        return self.objective_constant + sum(c * x[i] for i, c in self.objective.items())

    def violations(self, x, tol: float = FEAS_TOL) -> list[tuple[float, str]]:
        """Every bound, integrality or row violation above ``tol`` as ``(amount, description)``."""
        out = []
        for i, v in enumerate(self.variables):
            xi = x[i]
            if xi < v.lb - tol:
                out.append((v.lb - xi, f"{v.name} = {xi} below lower bound {v.lb}"))
            if xi > v.ub + tol:
                out.append((xi - v.ub, f"{v.name} = {xi} above upper bound {v.ub}"))
            if v.kind != CONTINUOUS and abs(xi - round(xi)) > tol:
                out.append((abs(xi - round(xi)), f"{v.name} = {xi} is not integral"))
        for con in self.constraints:
            lhs = sum(c * x[i] for i, c in con.terms.items())
            if con.sense == LE:
                viol = lhs - con.rhs
            elif con.sense == GE:
                viol = con.rhs - lhs
            else:
                viol = abs(lhs - con.rhs)
            if viol > tol:
                out.append((viol, f"{con.name}: lhs {lhs} {con.sense} {con.rhs}"))
        out.sort(key=lambda t: -t[0])
        return out

"""CPLEX LP text export and plain ``name value`` solution import."""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np

from .bnb import MilpSolution
from .model import BINARY, EQ, FEAS_TOL, INTEGER, MilpError, MilpModel

LINE_WIDTH = 79
IMPORTED = "imported"


class SolutionValidationError(MilpError):
    pass


def _num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _expr(model: MilpModel, terms: dict) -> list[str]:
    out = []
    for i in sorted(terms):
        c = terms[i]
        name = model.variables[i].name
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        tok = name if mag == 1 else f"{_num(mag)} {name}"
        if not out:
            out.append(tok if sign == "+" else f"- {tok}")
        else:
            out.append(f"{sign} {tok}")
    return out


def _wrap(head: str, tokens: list[str]) -> list[str]:
    lines, cur = [], head
    for tok in tokens:
        if len(cur) + 1 + len(tok) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def lp_text(model: MilpModel) -> str:
    if not model.sealed:
        raise MilpError("seal the model before exporting")
    lines = [f"\\ {model.name}", "Minimize"]
    obj = _expr(model, model.objective)
    if model.objective_constant:
        c = model.objective_constant
        obj.append(("- " if c < 0 else "+ ") + _num(abs(c)) if obj else _num(c))
    if not obj:
        obj = [f"0 {model.variables[0].name}"] if model.variables else ["0"]
    lines += _wrap(" obj:", obj)
    lines.append("Subject To")
    for con in model.constraints:
        toks = _expr(model, con.terms) or [f"0 {model.variables[0].name}"]
        op = "=" if con.sense == EQ else con.sense
        toks += [op, _num(con.rhs)]
        lines += _wrap(f" {con.name}:", toks)
    lines.append("Bounds")
    for v in model.variables:
        lo, hi = v.lb, v.ub
        if lo == hi:
            lines.append(f" {v.name} = {_num(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            lines.append(f" {v.name} free")
        elif math.isinf(hi):
            lines.append(f" {v.name} >= {_num(lo)}")
        elif math.isinf(lo):
            lines.append(f" -inf <= {v.name} <= {_num(hi)}")
        else:
            lines.append(f" {_num(lo)} <= {v.name} <= {_num(hi)}")
    for title, kind in (("Binaries", BINARY), ("Generals", INTEGER)):
        names = [v.name for v in model.variables if v.kind == kind]
        if names:
            lines.append(title)
            cur = ""
            for nm in names:
                if cur and len(cur) + 1 + len(nm) > LINE_WIDTH:
                    lines.append(cur)
                    cur = ""
                cur += " " + nm
            lines.append(cur)
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: MilpModel, path) -> Path:
    path = Path(path)
    path.write_text(lp_text(model))
    return path


def solution_text(model: MilpModel, x) -> str:
    return "".join(f"{v.name} {_num(x[i])}\n" for i, v in enumerate(model.variables))


def parse_solution(model: MilpModel, text: str) -> np.ndarray:
    x = np.full(model.num_vars, np.nan)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MilpError(f"line {lineno}: expected '<name> <value>', got {line!r}")
        name, val = parts
        if not model.has_var(name):
            raise MilpError(f"line {lineno}: unknown variable {name!r}")
        try:
            x[model.index(name)] = float(val)
        except ValueError:
            raise MilpError(f"line {lineno}: bad value {val!r}") from None
    missing = np.flatnonzero(np.isnan(x))
    if missing.size:
        names = [model.variables[i].name for i in missing[:5]]
        more = f" (+{missing.size - 5} more)" if missing.size > 5 else ""
        warnings.warn(
            f"{missing.size} variable(s) missing from solution, set to lower bound: "
            f"{', '.join(names)}{more}",
            stacklevel=2,
        )
        for i in missing:
            lb = model.variables[i].lb
            x[i] = lb if math.isfinite(lb) else 0.0
    return x


def import_solution(model: MilpModel, path, tol: float = FEAS_TOL) -> MilpSolution:
    """Read a ``name value`` file and check it against every bound and row."""
    x = parse_solution(model, Path(path).read_text())
    bad = model.violations(x, tol)
    if bad:
        amount, desc = bad[0]
        raise SolutionValidationError(
            f"imported solution violates {len(bad)} constraint(s); worst by {amount:.3g}: {desc}"
        )
    values = {v.name: float(x[i]) for i, v in enumerate(model.variables)}
    return MilpSolution(IMPORTED, values, float(model.objective_value(x)), math.nan, x, {})

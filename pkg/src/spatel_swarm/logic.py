"""Abstract syntax, concrete syntax and structural analyses for TSSL/SpaTeL.

Two layers of formulas:

* TSSL (spatial) formulas are evaluated at a node of a single quad
  transition system: :class:`TTrue`, :class:`Pred`, :class:`TNot`,
  :class:`TAnd`, :class:`TOr`, :class:`ExistsNext`, :class:`ForallNext`,
  :class:`ExistsUntil`, :class:`ForallUntil` and their release duals.
* SpaTeL formulas wrap TSSL formulas (:class:`Spatial`) in boolean and
  bounded temporal operators over half-open intervals ``[t1, t2)``.

Release operators only appear as the negation duals produced by
:func:`to_nnf`; they are still part of the concrete syntax so every
formula prints and parses.

Concrete syntax::

    spatel := tssl | "!" spatel | spatel ("&"|"|") spatel
            | ("F"|"G") interval spatel | spatel ("U"|"R") interval spatel
            | "(" spatel ")"
    tssl   := "true" | "mu" (">="|"<="|"==") number | "!" tssl
            | tssl ("&"|"|") tssl | ("A"|"E") labels "O" tssl
            | ("A"|"E") labels "(" tssl ("U"|"R") "[" int "]" tssl ")"
            | "(" tssl ")"
    labels := "[" ("L" | label ("," label)*) "]"
    interval := "[" number "," number ")"

Precedence from tightest: ``!``, prefix operators, ``&``, ``|``, ``U``/``R``.
Lower-case identifiers refer to ``let`` bindings (formulas) or named
constants (numbers, in threshold position).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

from .grid import ALL_LABELS, LABELS

GE, LE = ">=", "<="


class FormulaError(ValueError):
    pass


class ParseError(FormulaError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


def _labels(labels) -> frozenset:
    labels = frozenset(labels)
    if not labels:
        raise FormulaError("label set must be nonempty")
    if not labels <= ALL_LABELS:
        raise FormulaError(f"unknown labels {sorted(labels - ALL_LABELS)}")
    return labels


# -- TSSL ----------------------------------------------------------------------


@dataclass(frozen=True)
class TTrue:
    pass


@dataclass(frozen=True)
class Pred:
    op: str
    c: float

    def __post_init__(self):
        if self.op not in (GE, LE):
            raise FormulaError(f"predicate operator must be >= or <=, got {self.op!r}")
        if not math.isfinite(self.c):
            raise FormulaError("predicate threshold must be finite")
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class TNot:
    arg: "TsslFormula"


@dataclass(frozen=True)
class TAnd:
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise FormulaError("empty conjunction")


@dataclass(frozen=True)
class TOr:
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise FormulaError("empty disjunction")


@dataclass(frozen=True)
class _SpatialNext:
    labels: frozenset
    arg: "TsslFormula"

    def __post_init__(self):
        object.__setattr__(self, "labels", _labels(self.labels))


class ExistsNext(_SpatialNext):
    pass


class ForallNext(_SpatialNext):
    pass


@dataclass(frozen=True)
class _SpatialUntil:
    labels: frozenset
    bound: int
    left: "TsslFormula"
    right: "TsslFormula"

    def __post_init__(self):
        object.__setattr__(self, "labels", _labels(self.labels))
        if int(self.bound) != self.bound or self.bound < 1:
            raise FormulaError(f"spatial until bound must be an integer >= 1, got {self.bound}")
        object.__setattr__(self, "bound", int(self.bound))


class ExistsUntil(_SpatialUntil):
    pass


class ForallUntil(_SpatialUntil):
    pass


class ExistsRelease(_SpatialUntil):
    pass


class ForallRelease(_SpatialUntil):
    pass


for _cls in (ExistsNext, ForallNext, ExistsUntil, ForallUntil, ExistsRelease, ForallRelease):
    dataclass(frozen=True)(_cls)

TsslFormula = Union[
    TTrue, Pred, TNot, TAnd, TOr, ExistsNext, ForallNext,
    ExistsUntil, ForallUntil, ExistsRelease, ForallRelease,
]
_TSSL_TYPES = (TTrue, Pred, TNot, TAnd, TOr, _SpatialNext, _SpatialUntil)


# -- SpaTeL --------------------------------------------------------------------


@dataclass(frozen=True)
class Spatial:
    phi: TsslFormula

    def __post_init__(self):
        if not isinstance(self.phi, _TSSL_TYPES):
            raise FormulaError(f"Spatial wraps a TSSL formula, got {type(self.phi).__name__}")


@dataclass(frozen=True)
class Not:
    arg: "SpatelFormula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise FormulaError("empty conjunction")


@dataclass(frozen=True)
class Or:
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise FormulaError("empty disjunction")


def _check_interval(t1, t2):
    if not (math.isfinite(t1) and math.isfinite(t2)):
        raise FormulaError("interval endpoints must be finite")
    if t1 < 0 or t1 >= t2:
        raise FormulaError(f"malformed interval [{t1},{t2})")


@dataclass(frozen=True)
class _Temporal:
    t1: float
    t2: float
    arg: "SpatelFormula"

    def __post_init__(self):
        _check_interval(self.t1, self.t2)
        object.__setattr__(self, "t1", float(self.t1))
        object.__setattr__(self, "t2", float(self.t2))


class Eventually(_Temporal):
    pass


class Always(_Temporal):
    pass


@dataclass(frozen=True)
class _TemporalBinary:
    t1: float
    t2: float
    left: "SpatelFormula"
    right: "SpatelFormula"

    def __post_init__(self):
        _check_interval(self.t1, self.t2)
        object.__setattr__(self, "t1", float(self.t1))
        object.__setattr__(self, "t2", float(self.t2))


class Until(_TemporalBinary):
    pass


class Release(_TemporalBinary):
    pass


for _cls in (Eventually, Always, Until, Release):
    dataclass(frozen=True)(_cls)

SpatelFormula = Union[Spatial, Not, And, Or, Eventually, Always, Until, Release]


def is_tssl(f) -> bool:
    return isinstance(f, _TSSL_TYPES)


def children(f) -> tuple:
    if isinstance(f, (TNot, Not, _SpatialNext, _Temporal)):
        return (f.arg,)
    if isinstance(f, (TAnd, TOr, And, Or)):
        return f.args
    if isinstance(f, (_SpatialUntil, _TemporalBinary)):
        return (f.left, f.right)
    if isinstance(f, Spatial):
        return (f.phi,)
    return ()


def walk(f) -> Iterator:
    """Pre-order traversal over both layers."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


# -- horizon -------------------------------------------------------------------


def horizon(f) -> float:
    if is_tssl(f) or isinstance(f, Spatial):
        return 0.0
    if isinstance(f, Not):
        return horizon(f.arg)
    if isinstance(f, (And, Or)):
        return max(horizon(a) for a in f.args)
    if isinstance(f, _Temporal):
        return f.t2 + horizon(f.arg)
    if isinstance(f, _TemporalBinary):
        return f.t2 + max(horizon(f.left), horizon(f.right))
    raise FormulaError(f"not a formula: {f!r}")


# -- negation normal form --------------------------------------------------------


def _tssl_nnf(f, neg: bool):
    if isinstance(f, (TTrue, Pred)):
        return TNot(f) if neg else f
    if isinstance(f, TNot):
        return _tssl_nnf(f.arg, not neg)
    if isinstance(f, TAnd):
        args = tuple(_tssl_nnf(a, neg) for a in f.args)
        return TOr(args) if neg else TAnd(args)
    if isinstance(f, TOr):
        args = tuple(_tssl_nnf(a, neg) for a in f.args)
        return TAnd(args) if neg else TOr(args)
    if isinstance(f, _SpatialNext):
        arg = _tssl_nnf(f.arg, neg)
        if not neg:
            return type(f)(f.labels, arg)
        return (ForallNext if isinstance(f, ExistsNext) else ExistsNext)(f.labels, arg)
    if isinstance(f, _SpatialUntil):
        left, right = _tssl_nnf(f.left, neg), _tssl_nnf(f.right, neg)
        if not neg:
            return type(f)(f.labels, f.bound, left, right)
        dual = {
            ExistsUntil: ForallRelease,
            ForallUntil: ExistsRelease,
            ExistsRelease: ForallUntil,
            ForallRelease: ExistsUntil,
        }[type(f)]
        return dual(f.labels, f.bound, left, right)
    raise FormulaError(f"not a TSSL formula: {f!r}")


def _spatel_nnf(f, neg: bool):
    if isinstance(f, Spatial):
        return Spatial(_tssl_nnf(f.phi, neg))
    if isinstance(f, Not):
        return _spatel_nnf(f.arg, not neg)
    if isinstance(f, And):
        args = tuple(_spatel_nnf(a, neg) for a in f.args)
        return Or(args) if neg else And(args)
    if isinstance(f, Or):
        args = tuple(_spatel_nnf(a, neg) for a in f.args)
        return And(args) if neg else Or(args)
    if isinstance(f, _Temporal):
        arg = _spatel_nnf(f.arg, neg)
        if not neg:
            return type(f)(f.t1, f.t2, arg)
        return (Always if isinstance(f, Eventually) else Eventually)(f.t1, f.t2, arg)
    if isinstance(f, _TemporalBinary):
        left, right = _spatel_nnf(f.left, neg), _spatel_nnf(f.right, neg)
        if not neg:
            return type(f)(f.t1, f.t2, left, right)
        return (Release if isinstance(f, Until) else Until)(f.t1, f.t2, left, right)
    raise FormulaError(f"not a SpaTeL formula: {f!r}")


def to_nnf(f):
    """Push negations down to predicates (and ``true``).

    Negation is kept as ``TNot`` directly above a :class:`Pred` or
    :class:`TTrue`; until operators dualize to release operators.
    """
    if is_tssl(f):
        return _tssl_nnf(f, False)
    return _spatel_nnf(f, False)


def is_nnf(f) -> bool:
    for g in walk(f):
        if isinstance(g, Not):
            return False
        if isinstance(g, TNot) and not isinstance(g.arg, (Pred, TTrue)):
            return False
    return True


# -- predicate sites -----------------------------------------------------------

NON_INCREASING = "non_increasing"
NON_DECREASING = "non_decreasing"


@dataclass(frozen=True)
class PredicateSite:
    path: tuple  # child indices from the root
    pred: Pred
    negated: bool
    polarity: str


def _sites(f, path, neg, out):
    if isinstance(f, Pred):
        increasing = (f.op == LE) != neg
        out.append(PredicateSite(path, f, neg, NON_DECREASING if increasing else NON_INCREASING))
        return
    flip = isinstance(f, (TNot, Not))
    for idx, c in enumerate(children(f)):
        _sites(c, path + (idx,), neg != flip, out)


def predicate_sites(f) -> list[PredicateSite]:
    """Every predicate occurrence with the sign class of d(robustness)/d(threshold).

    ``mu >= c`` has robustness ``mu - c`` (non-increasing in ``c``); ``mu <= c``
    is non-decreasing; each enclosing negation flips the class.
    """
    out: list[PredicateSite] = []
    _sites(f, (), False, out)
    return out


def thresholds(f) -> list[float]:
    return [g.c for g in walk(f) if isinstance(g, Pred)]


# -- canonical form --------------------------------------------------------------


def canonical(f):
    """Lift maximal temporal-free subtrees into single :class:`Spatial` atoms.

    This is the form :func:`parse` produces; boolean connectives only appear
    at the SpaTeL level when a temporal operator sits below them.
    """
    if is_tssl(f):
        return Spatial(f)
    if isinstance(f, Spatial):
        return f
    if isinstance(f, Not):
        a = canonical(f.arg)
        return Spatial(TNot(a.phi)) if isinstance(a, Spatial) else Not(a)
    if isinstance(f, (And, Or)):
        args = tuple(canonical(a) for a in f.args)
        if all(isinstance(a, Spatial) for a in args):
            return Spatial((TAnd if isinstance(f, And) else TOr)(tuple(a.phi for a in args)))
        return type(f)(args)
    if isinstance(f, _Temporal):
        return type(f)(f.t1, f.t2, canonical(f.arg))
    if isinstance(f, _TemporalBinary):
        return type(f)(f.t1, f.t2, canonical(f.left), canonical(f.right))
    raise FormulaError(f"not a formula: {f!r}")


# -- printing ----------------------------------------------------------------------


def _num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _lab(labels: frozenset) -> str:
    if labels == ALL_LABELS:
        return "[L]"
    return "[" + ",".join(l for l in LABELS if l in labels) + "]"


_ATOMIC = (TTrue, Pred)


def _wrap(f) -> str:
    s = to_text(f)
    if isinstance(f, (TAnd, TOr, And, Or, _TemporalBinary)):
        return f"({s})"
    if isinstance(f, Spatial):
        return _wrap(f.phi)
    return s


def to_text(f) -> str:
    if isinstance(f, TTrue):
        return "true"
    if isinstance(f, Pred):
        return f"mu {f.op} {_num(f.c)}"
    if isinstance(f, (TNot, Not)):
        return "!" + _wrap(f.arg)
    if isinstance(f, (TAnd, And)):
        return " & ".join(_wrap(a) for a in f.args)
    if isinstance(f, (TOr, Or)):
        return " | ".join(_wrap(a) for a in f.args)
    if isinstance(f, _SpatialNext):
        q = "E" if isinstance(f, ExistsNext) else "A"
        return f"{q}{_lab(f.labels)} O {_wrap(f.arg)}"
    if isinstance(f, _SpatialUntil):
        q = "E" if isinstance(f, (ExistsUntil, ExistsRelease)) else "A"
        op = "U" if isinstance(f, (ExistsUntil, ForallUntil)) else "R"
        return f"{q}{_lab(f.labels)} ({_wrap(f.left)} {op}[{f.bound}] {_wrap(f.right)})"
    if isinstance(f, Spatial):
        return to_text(f.phi)
    if isinstance(f, _Temporal):
        op = "F" if isinstance(f, Eventually) else "G"
        return f"{op}[{_num(f.t1)},{_num(f.t2)}) {_wrap(f.arg)}"
    if isinstance(f, _TemporalBinary):
        op = "U" if isinstance(f, Until) else "R"
        return f"{_wrap(f.left)} {op}[{_num(f.t1)},{_num(f.t2)}) {_wrap(f.right)}"
    raise FormulaError(f"not a formula: {f!r}")


# -- parsing -------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<op>>=|<=|==|[!&|()\[\],=])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_RESERVED = {"mu", "true", "let", "const"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# Intermediate tree nodes are plain tuples so that named sub-formulas can be
# substituted before the two logic layers are separated.


class _Parser:
    def __init__(self, text, constants, definitions):
        self.toks = _tokenize(text)
        self.i = 0
        self.constants = constants
        self.definitions = definitions

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def number(self) -> float:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return float(t.text)
        if t.kind == "name" and t.text not in _RESERVED and t.text[0].islower():
            if t.text not in self.constants:
                self.error(f"undefined constant {t.text!r}")
            self.i += 1
            return float(self.constants[t.text])
        self.error(f"expected a number, found {t.text or 'end of input'!r}")

    def integer(self) -> int:
        t = self.tok
        x = self.number()
        if not float(x).is_integer():
            self.error("expected an integer", t)
        return int(x)

    def labels(self) -> frozenset:
        self.expect("[")
        if self.accept("L"):
            self.expect("]")
            return ALL_LABELS
        out = set()
        while True:
            t = self.tok
            if t.kind != "name" or t.text not in ALL_LABELS:
                self.error(f"unknown label {t.text!r}")
            self.i += 1
            out.add(t.text)
            if self.accept("]"):
                return frozenset(out)
            self.expect(",")

    def interval(self):
        start = self.tok
        self.expect("[")
        a = self.number()
        self.expect(",")
        b = self.number()
        self.expect(")")
        if a < 0 or a >= b:
            self.error(f"malformed interval [{_num(a)},{_num(b)})", start)
        return a, b

    # spatel := until_expr
    def formula(self):
        left = self.disj()
        while self.tok.text in ("U", "R") and self.toks[self.i + 1].text == "[":
            op = self.tok.text
            self.i += 1
            save = self.i
            self.expect("[")
            a = self.number()
            if self.tok.text == "]":
                # spatial bound: only legal inside A/E (...)
                self.i = save - 1
                break
            self.i = save
            t1, t2 = self.interval()
            right = self.disj()
            left = ("U" if op == "U" else "R", t1, t2, left, right)
        return left

    def disj(self):
        args = [self.conj()]
        while self.accept("|"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else ("or", args)

    def conj(self):
        args = [self.unary()]
        while self.accept("&"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else ("and", args)

    def unary(self):
        t = self.tok
        if self.accept("!"):
            return ("not", self.unary())
        if t.kind == "name" and t.text in ("F", "G") and self.toks[self.i + 1].text == "[":
            self.i += 1
            t1, t2 = self.interval()
            return (t.text, t1, t2, self.unary())
        if t.kind == "name" and t.text in ("A", "E") and self.toks[self.i + 1].text == "[":
            self.i += 1
            labs = self.labels()
            if self.accept("O"):
                return ("next", t.text, labs, self.unary())
            if self.accept("("):
                left = self.disj()
                op = self.tok.text
                if op not in ("U", "R"):
                    self.error("expected spatial 'U[k]' or 'R[k]'")
                self.i += 1
                self.expect("[")
                k = self.integer()
                if k < 1:
                    self.error("spatial until bound must be >= 1")
                self.expect("]")
                right = self.disj()
                self.expect(")")
                return ("suntil" if op == "U" else "srelease", t.text, labs, k, left, right)
            self.error("expected 'O' or '(' after spatial quantifier")
        return self.atom()

    def atom(self):
        t = self.tok
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.accept("true"):
            return ("true",)
        if self.accept("mu"):
            op = self.tok.text
            if op not in (">=", "<=", "=="):
                self.error("expected >=, <= or == after mu")
            self.i += 1
            c = self.number()
            if op == "==":
                return ("and", [("pred", GE, c), ("pred", LE, c)])
            return ("pred", op, c)
        if t.kind == "name" and t.text[0].islower() and t.text not in _RESERVED:
            if t.text not in self.definitions:
                self.error(f"undefined formula name {t.text!r}")
            self.i += 1
            return self.definitions[t.text]
        self.error(f"unexpected token {t.text or 'end of input'!r}")


def _has_temporal(node) -> bool:
    tag = node[0]
    if tag in ("F", "G", "U", "R"):
        return True
    if tag in ("not",):
        return _has_temporal(node[1])
    if tag in ("and", "or"):
        return any(_has_temporal(a) for a in node[1])
    return False


def _to_tssl(node):
    tag = node[0]
    if tag == "true":
        return TTrue()
    if tag == "pred":
        return Pred(node[1], node[2])
    if tag == "not":
        return TNot(_to_tssl(node[1]))
    if tag == "and":
        return TAnd(tuple(_to_tssl(a) for a in node[1]))
    if tag == "or":
        return TOr(tuple(_to_tssl(a) for a in node[1]))
    if tag == "next":
        cls = ExistsNext if node[1] == "E" else ForallNext
        return cls(node[2], _to_tssl(node[3]))
    if tag in ("suntil", "srelease"):
        cls = {
            ("suntil", "E"): ExistsUntil, ("suntil", "A"): ForallUntil,
            ("srelease", "E"): ExistsRelease, ("srelease", "A"): ForallRelease,
        }[(tag, node[1])]
        return cls(node[2], node[3], _to_tssl(node[4]), _to_tssl(node[5]))
    raise FormulaError("temporal operator nested inside a spatial operator")


def _to_spatel(node):
    if not _has_temporal(node):
        return Spatial(_to_tssl(node))
    tag = node[0]
    if tag == "not":
        return Not(_to_spatel(node[1]))
    if tag == "and":
        return And(tuple(_to_spatel(a) for a in node[1]))
    if tag == "or":
        return Or(tuple(_to_spatel(a) for a in node[1]))
    if tag in ("F", "G"):
        cls = Eventually if tag == "F" else Always
        return cls(node[1], node[2], _to_spatel(node[3]))
    if tag in ("U", "R"):
        cls = Until if tag == "U" else Release
        return cls(node[1], node[2], _to_spatel(node[3]), _to_spatel(node[4]))
    raise FormulaError("temporal operator nested inside a spatial operator")


def _parse_raw(text: str, constants: dict, definitions: dict):
    p = _Parser(text, constants, definitions)
    node = p.formula()
    if p.tok.kind != "eof":
        p.error(f"unexpected token {p.tok.text!r}")
    return node


def parse(text: str, constants: dict | None = None, definitions: dict | None = None) -> SpatelFormula:
    """Parse a SpaTeL formula.

    ``definitions`` maps names to formula text (expanded in insertion order,
    each may use earlier names); ``constants`` maps names to numbers.
    """
    constants = dict(constants or {})
    raw_defs: dict = {}
    for name, body in (definitions or {}).items():
        if not re.fullmatch(r"[a-z][A-Za-z0-9_]*", name) or name in _RESERVED:
            raise FormulaError(f"invalid formula name {name!r}")
        try:
            raw_defs[name] = _parse_raw(body, constants, raw_defs)
        except ParseError as e:
            raise FormulaError(f"in definition of {name!r}: {e}") from e
    return _to_spatel(_parse_raw(text, constants, raw_defs))


def parse_program(text: str, constants: dict | None = None) -> SpatelFormula:
    """Parse a formula file: ``const name = number`` and ``let name = formula``
    lines followed by the main formula (which may span several lines)."""
    constants = dict(constants or {})
    definitions: dict = {}
    # blank lines and leading spaces keep token positions relative to the file
    body: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        code = line.split("#", 1)[0]
        m = re.match(r"\s*(const|let)\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*", code)
        if m and not any(b.strip() for b in body):
            kind, name = m.groups()
            rhs = code[m.end():].strip()
            if kind == "const":
                try:
                    constants[name] = float(rhs)
                except ValueError:
                    raise ParseError(f"constant {name!r} is not a number", lineno, m.end() + 1) from None
            else:
                definitions[name] = "\n" * (lineno - 1) + " " * m.end() + code[m.end():]
            body.append("")
        else:
            body.append(line)
    if not any(b.split("#", 1)[0].strip() for b in body):
        raise FormulaError("formula file has no main formula")
    return parse("\n".join(body), constants, definitions)


def tssl(text: str, constants: dict | None = None) -> TsslFormula:
    """Parse a temporal-free formula and return the bare TSSL tree."""
    f = parse(text, constants)
    if not isinstance(f, Spatial):
        raise FormulaError("formula has temporal operators")
    return f.phi

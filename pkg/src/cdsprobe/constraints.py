"""OCL-subset invariants: lexer, recursive-descent parser, printer, evaluator.

Grammar::

    file       := constraint*
    constraint := 'context' IDENT 'inv' IDENT ':' expr
    expr       := or ('implies' expr)?
    or         := and ('or' and)*
    and        := unary ('and' unary)*
    unary      := 'not' unary | rel
    rel        := prim (RELOP prim)?
    prim       := 'self' '.' 'oclIsInState' '(' IDENT ')' | 'self' '.' IDENT
                | NUMBER | 'true' | 'false' | IDENT | '(' expr ')'

``implies`` is right-associative, ``and``/``or`` are left-associative and a
relational comparison does not chain. Evaluation is two-valued; a missing
property raises :class:`MissingProperty` instead of producing an undefined
value, and :func:`evaluate_set` turns that into an ``error`` verdict.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import (
    ConstraintTypeError,
    DuplicateConstraintName,
    MissingProperty,
    ParseError,
    RuntimeTypeError,
    SchemaError,
)

CONTEXT_CLASS = "Aircraft"
RELOPS = ("<", "<=", ">", ">=", "=", "<>")
ORDERING = ("<", "<=", ">", ">=")
KEYWORDS = {"context", "inv", "implies", "or", "and", "not", "true", "false", "self"}


# -- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Implies:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Rel:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IsInState:
    state: str


@dataclass(frozen=True)
class PropRef:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class RealLit:
    value: float


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class EnumLit:
    name: str


Expr = Union[Implies, Or, And, Not, Rel, IsInState, PropRef, IntLit, RealLit, BoolLit, EnumLit]


@dataclass(frozen=True)
class Constraint:
    context: str
    name: str
    body: Expr
    line: int = 0

    def __eq__(self, other):
        if not isinstance(other, Constraint):
            return NotImplemented
        return (self.context, self.name, self.body) == (other.context, other.name, other.body)

    def __hash__(self):
        return hash((self.context, self.name, self.body))


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()

    @property
    def states_mentioned(self) -> frozenset[str]:
        return frozenset(s for c in self.constraints for s in states_in(c.body))

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)


def walk(e: Expr):
    yield e
    if isinstance(e, (Implies, Or, And)):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Rel):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Not):
        yield from walk(e.operand)


def states_in(e: Expr) -> list[str]:
    return [n.state for n in walk(e) if isinstance(n, IsInState)]


def properties_in(e: Expr) -> list[str]:
    """Property names in order of first reference."""
    seen = []
    for n in walk(e):
        if isinstance(n, PropRef) and n.name not in seen:
            seen.append(n.name)
    return seen


# -- lexer ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<relop><=|>=|<>|<|>|=)
  | (?P<punct>[.:()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, ident, keyword, relop, punct, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# -- parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        return ParseError(f"{msg}, found {found!r}", tok.line, tok.col)

    def accept(self, kind, text=None):
        tok = self.tok
        if tok.kind == kind and (text is None or tok.text == text):
            self.i += 1
            return tok
        return None

    def expect(self, kind, text=None, what=None):
        tok = self.accept(kind, text)
        if tok is None:
            raise self.error(f"expected {what or text or kind}")
        return tok

    def file(self) -> list[Constraint]:
        out = []
        while self.tok.kind != "eof":
            out.append(self.constraint())
        return out

    def constraint(self) -> Constraint:
        start = self.expect("keyword", "context")
        ctx = self.expect("ident", what="context class name")
        if ctx.text != CONTEXT_CLASS:
            raise SchemaError(f"context {ctx.text!r} is not supported (line {ctx.line}); "
                              f"only {CONTEXT_CLASS} constraints are accepted")
        self.expect("keyword", "inv")
        name = self.expect("ident", what="invariant name")
        self.expect("punct", ":")
        body = self.expr()
        return Constraint(ctx.text, name.text, body, start.line)

    def expr(self) -> Expr:
        left = self.or_()
        if self.accept("keyword", "implies"):
            return Implies(left, self.expr())
        return left

    def or_(self) -> Expr:
        left = self.and_()
        while self.accept("keyword", "or"):
            left = Or(left, self.and_())
        return left

    def and_(self) -> Expr:
        left = self.unary()
        while self.accept("keyword", "and"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.accept("keyword", "not"):
            return Not(self.unary())
        return self.rel()

    def rel(self) -> Expr:
        left = self.prim()
        op = self.accept("relop")
        if op is None:
            return left
        return Rel(op.text, left, self.prim())

    def prim(self) -> Expr:
        tok = self.tok
        if self.accept("keyword", "self"):
            self.expect("punct", ".")
            name = self.expect("ident", what="property name or oclIsInState")
            if name.text == "oclIsInState":
                self.expect("punct", "(")
                state = self.expect("ident", what="state name")
                self.expect("punct", ")")
                return IsInState(state.text)
            return PropRef(name.text)
        if self.accept("number"):
            if any(ch in tok.text for ch in ".eE"):
                return RealLit(float(tok.text))
            return IntLit(int(tok.text))
        if self.accept("keyword", "true"):
            return BoolLit(True)
        if self.accept("keyword", "false"):
            return BoolLit(False)
        if self.accept("ident"):
            return EnumLit(tok.text)
        if self.accept("punct", "("):
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        raise self.error("expected an operand")


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return e


def parse_constraints(data) -> ConstraintSet:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"constraint file is not UTF-8: {exc}") from None
    constraints = _Parser(data).file()
    names = set()
    for c in constraints:
        if c.name in names:
            raise DuplicateConstraintName(f"invariant {c.name!r} defined twice (line {c.line})")
        names.add(c.name)
        if static_type(c.body, c.name) not in (None, "bool"):
            raise ConstraintTypeError(f"{c.name}: invariant body is not boolean (line {c.line})")
    return ConstraintSet(tuple(constraints))


# -- static typing -------------------------------------------------------------

def static_type(e: Expr, where: str = "", prop_types: dict | None = None):
    """Return 'bool', 'num', 'enum' or None (unknown) and reject ill-typed nodes.

    Without ``prop_types`` property references are untyped, so only
    comparisons between literals (and logical operators applied to
    literals) can be rejected.
    """
    prop_types = prop_types or {}
    if isinstance(e, (IntLit, RealLit)):
        return "num"
    if isinstance(e, BoolLit):
        return "bool"
    if isinstance(e, EnumLit):
        return "enum"
    if isinstance(e, PropRef):
        return prop_types.get(e.name)
    if isinstance(e, IsInState):
        return "bool"
    if isinstance(e, Not):
        _want_bool(static_type(e.operand, where, prop_types), e, where)
        return "bool"
    if isinstance(e, (And, Or, Implies)):
        _want_bool(static_type(e.left, where, prop_types), e, where)
        _want_bool(static_type(e.right, where, prop_types), e, where)
        return "bool"
    if isinstance(e, Rel):
        lt = static_type(e.left, where, prop_types)
        rt = static_type(e.right, where, prop_types)
        if lt and rt and lt != rt:
            raise ConstraintTypeError(f"{where}: cannot compare {lt} with {rt} using {e.op!r}")
        if e.op in ORDERING and (lt not in (None, "num") or rt not in (None, "num")):
            raise ConstraintTypeError(f"{where}: {e.op!r} needs numeric operands")
        return "bool"
    raise TypeError(f"not an expression node: {e!r}")


def _want_bool(t, node, where):
    if t not in (None, "bool"):
        raise ConstraintTypeError(f"{where}: {type(node).__name__} applied to a {t} operand")


# -- printer -------------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Rel: 5}


def _prec(e):
    return _PREC.get(type(e), 6)


def to_source(e: Expr) -> str:
    """Render an expression so that :func:`parse_expr` rebuilds the same tree."""

    def wrap(child, min_prec):
        s = to_source(child)
        return f"({s})" if _prec(child) < min_prec else s

    if isinstance(e, Implies):
        return f"{wrap(e.left, 2)} implies {wrap(e.right, 1)}"
    if isinstance(e, Or):
        return f"{wrap(e.left, 2)} or {wrap(e.right, 3)}"
    if isinstance(e, And):
        return f"{wrap(e.left, 3)} and {wrap(e.right, 4)}"
    if isinstance(e, Not):
        return f"not {wrap(e.operand, 4)}"
    if isinstance(e, Rel):
        return f"{wrap(e.left, 6)} {e.op} {wrap(e.right, 6)}"
    if isinstance(e, IsInState):
        return f"self.oclIsInState({e.state})"
    if isinstance(e, PropRef):
        return f"self.{e.name}"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, RealLit):
        return repr(float(e.value))
    if isinstance(e, EnumLit):
        return e.name
    raise TypeError(f"not an expression node: {e!r}")


def constraint_source(c: Constraint) -> str:
    return f"context {c.context} inv {c.name}: {to_source(c.body)}"


def constraints_source(cs: ConstraintSet) -> str:
    return "".join(constraint_source(c) + "\n" for c in cs)


# -- evaluation ----------------------------------------------------------------

def _value_kind(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "num"
    if isinstance(v, str):
        return "enum"
    raise RuntimeTypeError(f"unsupported instance value {v!r}")


_COMPARE = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
}


def eval_expr(e: Expr, inst):
    """Evaluate ``e`` against an object with ``current_state`` and ``properties``.

    Both operands of every logical operator are evaluated, so a missing
    property is reported even where short-circuiting would have hidden it.
    """
    if isinstance(e, IsInState):
        return inst.current_state == e.state
    if isinstance(e, PropRef):
        try:
            return inst.properties[e.name]
        except KeyError:
            raise MissingProperty(f"instance has no value for {e.name!r}") from None
    if isinstance(e, (IntLit, RealLit, BoolLit)):
        return e.value
    if isinstance(e, EnumLit):
        return e.name
    if isinstance(e, Not):
        return not _bool(eval_expr(e.operand, inst), e)
    if isinstance(e, (And, Or, Implies)):
        a = _bool(eval_expr(e.left, inst), e)
        b = _bool(eval_expr(e.right, inst), e)
        if isinstance(e, And):
            return a and b
        if isinstance(e, Or):
            return a or b
        return (not a) or b
    if isinstance(e, Rel):
        a = eval_expr(e.left, inst)
        b = eval_expr(e.right, inst)
        ka, kb = _value_kind(a), _value_kind(b)
        if ka != kb:
            raise RuntimeTypeError(f"cannot compare {ka} {a!r} with {kb} {b!r}")
        if e.op in ORDERING and ka != "num":
            raise RuntimeTypeError(f"{e.op!r} is only defined on numbers, got {ka}")
        return _COMPARE[e.op](a, b)
    raise TypeError(f"not an expression node: {e!r}")


def _bool(v, node):
    if not isinstance(v, bool):
        raise RuntimeTypeError(f"{type(node).__name__} expects a boolean, got {v!r}")
    return v


def evaluate(c: Constraint, inst) -> bool:
    return _bool(eval_expr(c.body, inst), c.body)


PASS, FAIL, ERROR = "pass", "fail", "error"


def evaluate_set(cs: ConstraintSet, inst) -> list[tuple[str, str]]:
    verdicts = []
    for c in cs:
        try:
            ok = evaluate(c, inst)
        except (MissingProperty, RuntimeTypeError):
            verdicts.append((c.name, ERROR))
        else:
            verdicts.append((c.name, PASS if ok else FAIL))
    return verdicts


# -- vocabulary check ----------------------------------------------------------

def check_vocabulary(cs: ConstraintSet, states, prop_types: dict) -> list[str]:
    """Report unknown states, unknown properties and type errors.

    ``prop_types`` maps each known property to 'num', 'bool' or 'enum'.
    An empty list means the constraint file only uses known vocabulary.
    """
    issues = []
    states = set(states)
    for c in cs:
        for s in states_in(c.body):
            if s not in states:
                issues.append(f"{c.name}: unknown state {s!r}")
        for p in properties_in(c.body):
            if p not in prop_types:
                issues.append(f"{c.name}: unknown property {p!r}")
        try:
            if static_type(c.body, c.name, prop_types) not in (None, "bool"):
                issues.append(f"{c.name}: body is not boolean")
        except ConstraintTypeError as exc:
            issues.append(str(exc))
    return issues

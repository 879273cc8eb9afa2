"""LTL over one-packet traces: AST, parser, printer and lasso evaluation.

Grammar (loosest binding first)::

    f ::= f -> f | f '|' f | f & f | f U f
        | ! f | X f | F f | G f | ( f ) | true | false
        | port = NAME | FIELD = VALUE

``->`` and ``U`` associate to the right, ``&`` and ``|`` to the left.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class LtlSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class LtlNameError(LookupError):
    pass


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class PortIs:
    port: str


@dataclass(frozen=True)
class FieldIs:
    field: str
    value: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Finally:
    arg: "Formula"


@dataclass(frozen=True)
class Globally:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


Formula = Union[Const, PortIs, FieldIs, Not, Next, Finally, Globally, And, Or, Implies, Until]
TRUE = Const(True)
FALSE = Const(False)

ATOMS = (Const, PortIs, FieldIs)
UNARY = {Not: "!", Next: "X", Finally: "F", Globally: "G"}
BINARY = {Implies: "->", Or: "|", And: "&", Until: "U"}
_PREC = {Implies: 1, Or: 2, And: 3, Until: 4}
_UNARY_PREC = 5


def conj(*fs: Formula) -> Formula:
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def packet_is(packet) -> Formula:
    """Whole-packet equality as a conjunction of field atoms."""
    return conj(*(FieldIs(k, v) for k, v in packet.items()))


def children(f: Formula) -> tuple:
    if isinstance(f, ATOMS):
        return ()
    if type(f) in UNARY:
        return (f.arg,)
    return (f.left, f.right)


def subformulas(f: Formula) -> list:
    """Distinct subformulas, children before parents."""
    order, seen, stack = [], set(), [(f, False)]
    while stack:
        node, done = stack.pop()
        if done:
            if node not in seen:
                seen.add(node)
                order.append(node)
            continue
        if node in seen:
            continue
        stack.append((node, True))
        for c in children(node):
            stack.append((c, False))
    return order


def normalize(f: Formula) -> Formula:
    """Rewrite into the core connectives !, |, X, U (plus constants and atoms)."""
    if isinstance(f, ATOMS):
        return f
    t = type(f)
    if t is Not:
        return Not(normalize(f.arg))
    if t is Next:
        return Next(normalize(f.arg))
    if t is Finally:
        return Until(TRUE, normalize(f.arg))
    if t is Globally:
        return Not(Until(TRUE, Not(normalize(f.arg))))
    left, right = normalize(f.left), normalize(f.right)
    if t is Or:
        return Or(left, right)
    if t is And:
        return Not(Or(Not(left), Not(right)))
    if t is Implies:
        return Or(Not(left), right)
    return Until(left, right)


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->)|([!&|()=])|([A-Za-z0-9_#~.$@:/\[\]]+))")
_KEYWORDS_UNARY = {"!": Not, "X": Next, "F": Finally, "G": Globally}


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LtlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tok = m.group(1) or m.group(2) or m.group(3)
        toks.append((tok, m.start(m.lastindex)))
        pos = m.end()
    toks.append(("<end>", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> str:
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, expected: str | None = None) -> str:
        tok = self.toks[self.i][0]
        if expected is not None and tok != expected:
            raise LtlSyntaxError(f"expected {expected!r}, found {tok!r}", self.pos())
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implies()
        if self.peek() != "<end>":
            raise LtlSyntaxError(f"unexpected {self.peek()!r}", self.pos())
        return f

    def implies(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.until()
        while self.peek() == "&":
            self.take()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U" and self.peek(1) != "=":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok in _KEYWORDS_UNARY and self.peek(1) != "=":
            self.take()
            return _KEYWORDS_UNARY[tok](self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok == "(":
            self.take()
            f = self.implies()
            self.take(")")
            return f
        if tok in ("<end>", ")", "&", "|", "->", "="):
            raise LtlSyntaxError(f"expected a formula, found {tok!r}", self.pos())
        if self.peek(1) == "=":
            name = self.take()
            self.take("=")
            value = self.peek()
            if value in ("<end>", "(", ")", "&", "|", "->", "=", "!"):
                raise LtlSyntaxError(f"expected a name after '=', found {value!r}", self.pos())
            self.take()
            return PortIs(value) if name == "port" else FieldIs(name, value)
        if tok in ("true", "TRUE"):
            self.take()
            return TRUE
        if tok in ("false", "FALSE"):
            self.take()
            return FALSE
        raise LtlSyntaxError(f"expected an atom 'NAME = VALUE', found {tok!r}", self.pos())


def parse_ltl(text: str) -> Formula:
    return _Parser(text).parse()


# -- printing --------------------------------------------------------------

def _prec(f: Formula) -> int:
    if isinstance(f, ATOMS):
        return 9
    if type(f) in UNARY:
        return _UNARY_PREC
    return _PREC[type(f)]


def format_ltl(f: Formula, *, true_word: str = "true", false_word: str = "false",
               name=lambda s: s) -> str:
    """Render with the minimal parentheses that keep ``parse_ltl`` round-tripping."""

    def go(g: Formula, need: int) -> str:
        s = render(g)
        return f"({s})" if _prec(g) < need else s

    def render(g: Formula) -> str:
        t = type(g)
        if t is Const:
            return true_word if g.value else false_word
        if t is PortIs:
            return f"port = {name(g.port)}"
        if t is FieldIs:
            return f"{name(g.field)} = {name(g.value)}"
        if t in UNARY:
            op = UNARY[t]
            inner = go(g.arg, _UNARY_PREC)
            return f"!{inner}" if op == "!" else f"{op} {inner}"
        p = _PREC[t]
        if t in (Implies, Until):  # right associative
            return f"{go(g.left, p + 1)} {BINARY[t]} {go(g.right, p)}"
        return f"{go(g.left, p)} {BINARY[t]} {go(g.right, p + 1)}"

    return render(f)


# -- names -----------------------------------------------------------------

def unresolved_names(f: Formula, topo, space) -> list[str]:
    out = []
    for g in subformulas(f):
        if isinstance(g, PortIs) and g.port not in topo.ports:
            out.append(f"unknown port {g.port!r}")
        elif isinstance(g, FieldIs):
            if g.field not in space:
                out.append(f"unknown field {g.field!r}")
            elif g.value not in space.domain(g.field):
                out.append(f"unknown value {g.value!r} for field {g.field!r}")
    return out


def resolve(f: Formula, topo, space) -> Formula:
    problems = unresolved_names(f, topo, space)
    if problems:
        raise LtlNameError("; ".join(problems))
    return f


# -- evaluation ------------------------------------------------------------

def eval_lasso(f: Formula, trace) -> bool:
    """Does the infinite extension of ``trace`` (last state repeated) satisfy ``f``?

    Backward dynamic programming over positions: the final position is
    stationary, so X, U, F and G collapse to their argument there.
    """
    n = len(trace)
    if n == 0:
        raise ValueError("empty trace")
    vals: dict = {}
    for g in subformulas(f):
        t = type(g)
        if t is Const:
            v = [g.value] * n
        elif t is PortIs:
            v = [lp.port == g.port for lp in trace]
        elif t is FieldIs:
            try:
                v = [lp.packet[g.field] == g.value for lp in trace]
            except KeyError:
                raise LtlNameError(f"unknown field {g.field!r}") from None
        elif t is Not:
            v = [not x for x in vals[g.arg]]
        elif t is And:
            v = [a and b for a, b in zip(vals[g.left], vals[g.right])]
        elif t is Or:
            v = [a or b for a, b in zip(vals[g.left], vals[g.right])]
        elif t is Implies:
            v = [(not a) or b for a, b in zip(vals[g.left], vals[g.right])]
        elif t is Next:
            a = vals[g.arg]
            v = a[1:] + a[-1:]
        else:
            v = [False] * n
            if t is Until:
                a, b = vals[g.left], vals[g.right]
                v[-1] = b[-1]
                for i in range(n - 2, -1, -1):
                    v[i] = b[i] or (a[i] and v[i + 1])
            elif t is Finally:
                a = vals[g.arg]
                v[-1] = a[-1]
                for i in range(n - 2, -1, -1):
                    v[i] = a[i] or v[i + 1]
            elif t is Globally:
                a = vals[g.arg]
                v[-1] = a[-1]
                for i in range(n - 2, -1, -1):
                    v[i] = a[i] and v[i + 1]
            else:
                raise TypeError(f"not a formula: {g!r}")
        vals[g] = v
    return vals[f][0]

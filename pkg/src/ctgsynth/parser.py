"""Parser for the specification surface syntax.

Surface formulas may use negation, implication and equivalence on compound
terms; everything is desugared to core negation normal form using the
bounded-operator dualities.  Negating an unbounded weak-until has no core
form and is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .formula import (
    FALSE,
    TRUE,
    BoundedWeak,
    Eventually,
    Formula,
    Lit,
    Next,
    Weak,
    conj,
    disj,
    iter_subformulas,
    simplify,
)

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
RESERVED = {"X", "F", "G", "W", "U", "true", "false",
            "INPUTS", "OUTPUTS", "ASSUME", "GUARANTEE"}


class SpecError(ValueError):
    """Parse or validation failure, carrying source position when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Spec:
    """A parsed specification: proposition declarations, assumptions, guarantee."""

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    assumptions: tuple[Formula, ...]
    guarantee: Formula

    @property
    def input_set(self) -> frozenset[str]:
        return frozenset(self.inputs)

    @property
    def output_set(self) -> frozenset[str]:
        return frozenset(self.outputs)


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


_SYMBOLS = ["<->", "->", "||", "&&", "<=", ";", "[", "]", "(", ")", "!"]


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(_Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if c.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                tokens.append(_Token("nat", text[i:j], line, col))
                col += j - i
                i = j
            else:
                m = NAME_RE.match(text, i)
                if not m:
                    raise SpecError(f"unexpected character {c!r}", line, col)
                word = m.group(0)
                kind = "kw" if word in RESERVED else "id"
                tokens.append(_Token(kind, word, line, col))
                col += len(word)
                i = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# Surface tree: nested tuples, desugared to core NNF after parsing.


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, value: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise SpecError(f"expected {want!r}, found {t.value or t.kind!r}", t.line, t.col)
        return self.next()

    def accept(self, kind: str, value: str | None = None) -> bool:
        t = self.peek()
        if t.kind == kind and (value is None or t.value == value):
            self.next()
            return True
        return False

    # -- grammar ---------------------------------------------------------

    def idlist(self) -> list[str]:
        names = []
        while self.peek().kind == "id":
            names.append(self.next().value)
        return names

    def spec(self) -> tuple[list[str], list[str], list[tuple], tuple]:
        self.expect("kw", "INPUTS")
        inputs = self.idlist()
        self.expect("sym", ";")
        self.expect("kw", "OUTPUTS")
        outputs = self.idlist()
        self.expect("sym", ";")
        assumptions = []
        while self.accept("kw", "ASSUME"):
            assumptions.append(self.formula())
            self.expect("sym", ";")
        self.expect("kw", "GUARANTEE")
        guarantee = self.formula()
        self.expect("sym", ";")
        self.expect("eof")
        return inputs, outputs, assumptions, guarantee

    def formula(self) -> tuple:
        t = self.impl()
        while self.accept("sym", "<->"):
            t = ("iff", t, self.impl())
        return t

    def impl(self) -> tuple:
        parts = [self.disjunction()]
        while self.accept("sym", "->"):
            parts.append(self.disjunction())
        t = parts[-1]
        for lhs in reversed(parts[:-1]):
            t = ("impl", lhs, t)
        return t

    def disjunction(self) -> tuple:
        t = self.conjunction()
        while self.accept("sym", "||"):
            t = ("or", t, self.conjunction())
        return t

    def conjunction(self) -> tuple:
        t = self.unary()
        while self.accept("sym", "&&"):
            t = ("and", t, self.unary())
        return t

    def nat(self) -> int:
        return int(self.expect("nat").value)

    def unary(self) -> tuple:
        t = self.peek()
        if self.accept("sym", "!"):
            return ("not", self.unary())
        if t.kind == "kw" and t.value == "X":
            self.next()
            n = 1
            if self.accept("sym", "["):
                n = self.nat()
                self.expect("sym", "]")
            return ("X", n, self.unary())
        if t.kind == "kw" and t.value == "F":
            self.next()
            self.expect("sym", "[")
            self.expect("sym", "<=")
            n = self.nat()
            self.expect("sym", "]")
            return ("F", n, self.unary())
        if t.kind == "kw" and t.value == "G":
            self.next()
            if self.accept("sym", "["):
                self.expect("sym", "<=")
                n = self.nat()
                self.expect("sym", "]")
                return ("Gb", n, self.unary())
            return ("G", self.unary())
        lhs = self.atom()
        nxt = self.peek()
        if nxt.kind == "kw" and nxt.value in ("W", "U"):
            op = self.next().value
            if self.accept("sym", "["):
                self.expect("sym", "<=")
                n = self.nat()
                self.expect("sym", "]")
                return ("Wb" if op == "W" else "Ub", n, lhs, self.unary())
            if op == "U":
                raise SpecError("until must carry a bound", nxt.line, nxt.col)
            return ("W", lhs, self.unary())
        return lhs

    def atom(self) -> tuple:
        t = self.peek()
        if t.kind == "id":
            self.next()
            return ("lit", t.value, t.line, t.col)
        if t.kind == "kw" and t.value == "true":
            self.next()
            return ("true",)
        if t.kind == "kw" and t.value == "false":
            self.next()
            return ("false",)
        if self.accept("sym", "("):
            inner = self.formula()
            self.expect("sym", ")")
            return inner
        raise SpecError(f"expected an atom, found {t.value or t.kind!r}", t.line, t.col)


def desugar(tree: tuple, positive: bool = True, declared: frozenset[str] | None = None) -> Formula:
    """Surface tree to core NNF, pushing negation through the operator duals."""
    tag = tree[0]
    if tag == "lit":
        _, name, line, col = tree
        if declared is not None and name not in declared:
            raise SpecError(f"undeclared proposition {name!r}", line, col)
        return Lit(name, positive)
    if tag == "true":
        return TRUE if positive else FALSE
    if tag == "false":
        return FALSE if positive else TRUE
    if tag == "not":
        return desugar(tree[1], not positive, declared)
    if tag == "and":
        parts = [desugar(t, positive, declared) for t in tree[1:]]
        return conj(parts) if positive else disj(parts)
    if tag == "or":
        parts = [desugar(t, positive, declared) for t in tree[1:]]
        return disj(parts) if positive else conj(parts)
    if tag == "impl":
        _, lhs, rhs = tree
        if positive:
            return disj([desugar(lhs, False, declared), desugar(rhs, True, declared)])
        return conj([desugar(lhs, True, declared), desugar(rhs, False, declared)])
    if tag == "iff":
        _, lhs, rhs = tree
        if positive:
            return conj([
                disj([desugar(lhs, False, declared), desugar(rhs, True, declared)]),
                disj([desugar(rhs, False, declared), desugar(lhs, True, declared)]),
            ])
        return disj([
            conj([desugar(lhs, True, declared), desugar(rhs, False, declared)]),
            conj([desugar(lhs, False, declared), desugar(rhs, True, declared)]),
        ])
    if tag == "X":
        _, n, sub = tree
        body = desugar(sub, positive, declared)
        return body if n == 0 else Next(n, body)
    if tag == "F":
        _, n, sub = tree
        if positive:
            body = desugar(sub, True, declared)
            return body if n == 0 else Eventually(n, body)
        body = desugar(sub, False, declared)
        return body if n == 0 else BoundedWeak(n, body, FALSE)
    if tag == "Gb":
        _, n, sub = tree
        if positive:
            body = desugar(sub, True, declared)
            return body if n == 0 else BoundedWeak(n, body, FALSE)
        body = desugar(sub, False, declared)
        return body if n == 0 else Eventually(n, body)
    if tag == "G":
        if not positive:
            raise SpecError("negation of unbounded G/W is not expressible in the fragment")
        return Weak(desugar(tree[1], True, declared), FALSE)
    if tag == "W":
        _, lhs, rhs = tree
        if not positive:
            raise SpecError("negation of unbounded G/W is not expressible in the fragment")
        return Weak(desugar(lhs, True, declared), desugar(rhs, True, declared))
    if tag == "Wb":
        _, n, lhs, rhs = tree
        if positive:
            a = desugar(lhs, True, declared)
            b = desugar(rhs, True, declared)
            return disj([a, b]) if n == 0 else BoundedWeak(n, a, b)
        # !(a W[<=n] b) == (!b) U[<=n] (!a && !b)
        na = desugar(lhs, False, declared)
        nb = desugar(rhs, False, declared)
        body = conj([na, nb])
        if n == 0:
            return body
        return conj([BoundedWeak(n, nb, body), Eventually(n, body)])
    if tag == "Ub":
        _, n, lhs, rhs = tree
        if positive:
            a = desugar(lhs, True, declared)
            b = desugar(rhs, True, declared)
            if n == 0:
                return b
            return conj([BoundedWeak(n, a, b), Eventually(n, b)])
        # !(a U[<=n] b) == !(a W[<=n] b) || G[<=n] !b
        nb = desugar(rhs, False, declared)
        left = desugar(("Wb", n, lhs, rhs), False, declared)
        right = nb if n == 0 else BoundedWeak(n, nb, FALSE)
        return disj([left, right])
    raise SpecError(f"unknown surface node {tag!r}")


def _validate_assumption(f: Formula, index: int) -> None:
    for g in iter_subformulas(f):
        if isinstance(g, Weak):
            if g.rhs != FALSE:
                raise SpecError(
                    f"assumption {index}: only G-shaped unbounded operators are supported")
            if not g.lhs.is_fully_bounded():
                raise SpecError(f"assumption {index}: body of G is not fully bounded")


def parse_spec(text: str) -> Spec:
    """Parse and validate a full specification document."""
    parser = _Parser(_tokenize(text))
    inputs, outputs, assume_trees, guarantee_tree = parser.spec()
    dup = set(inputs) & set(outputs)
    if dup:
        raise SpecError(f"propositions declared both input and output: {sorted(dup)}")
    for names in (inputs, outputs):
        if len(names) != len(set(names)):
            raise SpecError("duplicate proposition declaration")
    declared = frozenset(inputs) | frozenset(outputs)
    assumptions = []
    for idx, tree in enumerate(assume_trees):
        f = simplify(desugar(tree, True, declared))
        _validate_assumption(f, idx)
        assumptions.append(f)
    guarantee = simplify(desugar(guarantee_tree, True, declared))
    return Spec(tuple(inputs), tuple(outputs), tuple(assumptions), guarantee)


def parse_formula(text: str, declared: frozenset[str] | None = None) -> Formula:
    """Parse a single surface formula (used by tests and tooling)."""
    parser = _Parser(_tokenize(text))
    tree = parser.formula()
    parser.expect("eof")
    return simplify(desugar(tree, True, declared))

"""Term representation for the bounded-safety temporal fragment.

Formulas are in negation normal form: negation occurs only on atomic
propositions.  Temporal operators carry either a numeric bound (as parsed
from a specification) or a countdown timer (inside game locations).
``And``/``Or`` argument lists are kept flattened, duplicate-free and sorted
by the canonical term order at all times; use :func:`conj` and :func:`disj`
to build them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union


@dataclass(frozen=True)
class TimerId:
    """A countdown timer ``t_index^duration``; the pool for a duration d has indices 0..d."""

    duration: int
    index: int

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError(f"timer duration must be >= 1, got {self.duration}")
        if not 0 <= self.index <= self.duration:
            raise ValueError(f"timer index {self.index} outside pool 0..{self.duration}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.duration, self.index)

    def __str__(self) -> str:
        return f"t{self.index}^{self.duration}"


Bound = Union[int, TimerId]


def bound_key(b: Bound) -> tuple:
    if isinstance(b, TimerId):
        return (1, b.duration, b.index)
    if isinstance(b, int):
        return (0, b, 0)
    return (2, getattr(b, "duration", 0), 0)


def bound_text(b: Bound) -> str:
    if isinstance(b, int):
        return f"<={b}"
    return str(b)


class Formula:
    """Base class; subclasses are immutable and hash/compare structurally."""

    _rank = -1

    @cached_property
    def key(self) -> tuple:
        return self._key()

    @cached_property
    def text(self) -> str:
        return self._text()

    def _key(self) -> tuple:  # pragma: no cover - abstract
        raise NotImplementedError

    def _text(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    @cached_property
    def timers(self) -> frozenset[TimerId]:
        return self._timers()

    def _timers(self) -> frozenset[TimerId]:
        return frozenset()

    @cached_property
    def props(self) -> frozenset[str]:
        return self._props()

    def _props(self) -> frozenset[str]:
        return frozenset()

    def is_fully_bounded(self) -> bool:
        """True when the formula contains no unbounded weak-until."""
        return all(not isinstance(g, Weak) for g in iter_subformulas(self))

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return self.text


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    _rank = 0

    def _key(self):
        return (0,)

    def _text(self):
        return "true"


@dataclass(frozen=True, repr=False)
class FalseF(Formula):
    _rank = 1

    def _key(self):
        return (1,)

    def _text(self):
        return "false"


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True, repr=False)
class Lit(Formula):
    """A possibly negated atomic proposition."""

    prop: str
    positive: bool = True
    _rank = 2

    def _key(self):
        return (2, self.prop, not self.positive)

    def _text(self):
        return self.prop if self.positive else f"!{self.prop}"

    def _props(self):
        return frozenset({self.prop})

    def negated(self) -> "Lit":
        return Lit(self.prop, not self.positive)


@dataclass(frozen=True, repr=False)
class Next(Formula):
    """``X[b] sub``: sub holds exactly b steps from now."""

    bound: Bound
    sub: Formula
    _rank = 3

    def _key(self):
        return (3, bound_key(self.bound), self.sub.key)

    def _text(self):
        return f"X[{self.bound}]{_wrap(self.sub)}"

    def _timers(self):
        own = frozenset({self.bound}) if isinstance(self.bound, TimerId) else frozenset()
        return own | self.sub.timers

    def _props(self):
        return self.sub.props


@dataclass(frozen=True, repr=False)
class Eventually(Formula):
    """``F[<=b] sub``: sub holds within b steps."""

    bound: Bound
    sub: Formula
    _rank = 4

    def _key(self):
        return (4, bound_key(self.bound), self.sub.key)

    def _text(self):
        return f"F[{bound_text(self.bound)}]{_wrap(self.sub)}"

    def _timers(self):
        own = frozenset({self.bound}) if isinstance(self.bound, TimerId) else frozenset()
        return own | self.sub.timers

    def _props(self):
        return self.sub.props


@dataclass(frozen=True, repr=False)
class BoundedWeak(Formula):
    """``lhs W[<=b] rhs``: lhs holds up to b steps or until rhs releases it."""

    bound: Bound
    lhs: Formula
    rhs: Formula
    _rank = 5

    def _key(self):
        return (5, bound_key(self.bound), self.lhs.key, self.rhs.key)

    def _text(self):
        return f"({self.lhs.text} W[{bound_text(self.bound)}] {self.rhs.text})"

    def _timers(self):
        own = frozenset({self.bound}) if isinstance(self.bound, TimerId) else frozenset()
        return own | self.lhs.timers | self.rhs.timers

    def _props(self):
        return self.lhs.props | self.rhs.props


@dataclass(frozen=True, repr=False)
class Weak(Formula):
    """Unbounded weak-until; ``G f`` is encoded as ``f W false``."""

    lhs: Formula
    rhs: Formula
    _rank = 6

    def _key(self):
        return (6, self.lhs.key, self.rhs.key)

    def _text(self):
        return f"({self.lhs.text} W {self.rhs.text})"

    def _timers(self):
        return self.lhs.timers | self.rhs.timers

    def _props(self):
        return self.lhs.props | self.rhs.props


@dataclass(frozen=True, repr=False)
class And(Formula):
    parts: tuple[Formula, ...]
    _rank = 7

    def _key(self):
        return (7,) + tuple(p.key for p in self.parts)

    def _text(self):
        return "(" + " & ".join(p.text for p in self.parts) + ")"

    def _timers(self):
        return frozenset().union(*(p.timers for p in self.parts))

    def _props(self):
        return frozenset().union(*(p.props for p in self.parts))


@dataclass(frozen=True, repr=False)
class Or(Formula):
    parts: tuple[Formula, ...]
    _rank = 8

    def _key(self):
        return (8,) + tuple(p.key for p in self.parts)

    def _text(self):
        return "(" + " | ".join(p.text for p in self.parts) + ")"

    def _timers(self):
        return frozenset().union(*(p.timers for p in self.parts))

    def _props(self):
        return frozenset().union(*(p.props for p in self.parts))


def _wrap(f: Formula) -> str:
    if isinstance(f, (Lit, TrueF, FalseF, And, Or, BoundedWeak, Weak)):
        return f.text
    return f"({f.text})"


def conj(parts: Iterable[Formula]) -> Formula:
    """Conjunction with constant folding, flattening, dedup and canonical order."""
    out: list[Formula] = []
    seen: set[tuple] = set()
    for p in parts:
        if isinstance(p, TrueF):
            continue
        if isinstance(p, FalseF):
            return FALSE
        sub = p.parts if isinstance(p, And) else (p,)
        for q in sub:
            if isinstance(q, FalseF):
                return FALSE
            if isinstance(q, TrueF):
                continue
            if q.key not in seen:
                seen.add(q.key)
                out.append(q)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda f: f.key)
    return And(tuple(out))


def disj(parts: Iterable[Formula]) -> Formula:
    """Disjunction with constant folding, flattening, dedup and canonical order."""
    out: list[Formula] = []
    seen: set[tuple] = set()
    for p in parts:
        if isinstance(p, FalseF):
            continue
        if isinstance(p, TrueF):
            return TRUE
        sub = p.parts if isinstance(p, Or) else (p,)
        for q in sub:
            if isinstance(q, TrueF):
                return TRUE
            if isinstance(q, FalseF):
                continue
            if q.key not in seen:
                seen.add(q.key)
                out.append(q)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda f: f.key)
    return Or(tuple(out))


def cfold(f: Formula) -> Formula:
    """Recursive constant folding; collapses true/false units in And/Or."""
    if isinstance(f, And):
        return conj(cfold(p) for p in f.parts)
    if isinstance(f, Or):
        return disj(cfold(p) for p in f.parts)
    if isinstance(f, Next):
        return Next(f.bound, cfold(f.sub))
    if isinstance(f, Eventually):
        return Eventually(f.bound, cfold(f.sub))
    if isinstance(f, BoundedWeak):
        return BoundedWeak(f.bound, cfold(f.lhs), cfold(f.rhs))
    if isinstance(f, Weak):
        return Weak(cfold(f.lhs), cfold(f.rhs))
    return f


def simplify(f: Formula) -> Formula:
    """Canonical form: folding, flatten/sort/dedup, absorption, complement folding.

    Idempotent; does not chase full logical equivalence.
    """
    if isinstance(f, And):
        parts = _flatten_simplified((simplify(p) for p in f.parts), And, FalseF)
        if isinstance(parts, Formula):
            return parts
        if _has_complementary(parts):
            return FALSE
        return conj(_prune_implied(parts, keep_stronger=True))
    if isinstance(f, Or):
        parts = _flatten_simplified((simplify(p) for p in f.parts), Or, TrueF)
        if isinstance(parts, Formula):
            return parts
        if _has_complementary(parts):
            return TRUE
        return disj(_prune_implied(parts, keep_stronger=False))
    if isinstance(f, Next):
        return Next(f.bound, simplify(f.sub))
    if isinstance(f, Eventually):
        return Eventually(f.bound, simplify(f.sub))
    if isinstance(f, BoundedWeak):
        return BoundedWeak(f.bound, simplify(f.lhs), simplify(f.rhs))
    if isinstance(f, Weak):
        return Weak(simplify(f.lhs), simplify(f.rhs))
    return f


def _flatten_simplified(parts, node_cls, absorbing_cls):
    out: list[Formula] = []
    seen: set[tuple] = set()
    for p in parts:
        if isinstance(p, absorbing_cls):
            return p
        if isinstance(p, (TrueF, FalseF)):
            continue
        for q in p.parts if isinstance(p, node_cls) else (p,):
            if isinstance(q, absorbing_cls):
                return q
            if isinstance(q, (TrueF, FalseF)):
                continue
            if q.key not in seen:
                seen.add(q.key)
                out.append(q)
    if not out:
        return TRUE if absorbing_cls is FalseF else FALSE
    if len(out) == 1:
        return out[0]
    return out


def _has_complementary(parts: list[Formula]) -> bool:
    lits = {(p.prop, p.positive) for p in parts if isinstance(p, Lit)}
    return any((prop, not pos) in lits for prop, pos in lits)


def _bound_le(a: Bound, b: Bound) -> bool:
    """Is the deadline a no later than b?  Comparable only within one kind.

    Same-duration timers are value-ordered by index (construction
    invariant), numeric bounds by magnitude.
    """
    if isinstance(a, TimerId) and isinstance(b, TimerId):
        return a.duration == b.duration and a.index <= b.index
    if isinstance(a, int) and isinstance(b, int):
        return a <= b
    return False


def implies(f: Formula, g: Formula) -> bool:
    """Sound syntactic implication check (incomplete).

    Used for subsumption: absorption, and the dominance of earlier-deadline
    eventualities / longer-deadline weak-untils over later/shorter ones.
    """
    if f.key == g.key:
        return True
    if isinstance(g, TrueF) or isinstance(f, FalseF):
        return True
    if isinstance(f, TrueF) or isinstance(g, FalseF):
        return False
    if isinstance(f, Or):
        return all(implies(p, g) for p in f.parts)
    if isinstance(g, And):
        return all(implies(f, p) for p in g.parts)
    if isinstance(f, And) and any(implies(p, g) for p in f.parts):
        return True
    if isinstance(g, Or) and any(implies(f, p) for p in g.parts):
        return True
    if isinstance(f, Eventually) and isinstance(g, Eventually):
        return _bound_le(f.bound, g.bound) and implies(f.sub, g.sub)
    if isinstance(f, Next) and isinstance(g, Next):
        return f.bound == g.bound and implies(f.sub, g.sub)
    if isinstance(f, BoundedWeak) and isinstance(g, BoundedWeak):
        return (_bound_le(g.bound, f.bound)
                and implies(f.lhs, g.lhs) and implies(f.rhs, g.rhs))
    if isinstance(f, Weak) and isinstance(g, Weak):
        return implies(f.lhs, g.lhs) and implies(f.rhs, g.rhs)
    if isinstance(f, Weak) and isinstance(g, BoundedWeak):
        return implies(f.lhs, g.lhs) and implies(f.rhs, g.rhs)
    return False


def _prune_implied(parts: list[Formula], keep_stronger: bool) -> list[Formula]:
    """Drop redundant juncts: in a conjunction the implied ones, in a
    disjunction the implying ones.  Parts are distinct already."""
    kept: list[Formula] = []
    for i, p in enumerate(parts):
        redundant = False
        for j, q in enumerate(parts):
            if i == j:
                continue
            a, b = (q, p) if keep_stronger else (p, q)
            if implies(a, b) and not (implies(b, a) and j > i):
                redundant = True
                break
        if not redundant:
            kept.append(p)
    return kept


def iter_subformulas(f: Formula):
    yield f
    if isinstance(f, (And, Or)):
        for p in f.parts:
            yield from iter_subformulas(p)
    elif isinstance(f, (Next, Eventually)):
        yield from iter_subformulas(f.sub)
    elif isinstance(f, (BoundedWeak, Weak)):
        yield from iter_subformulas(f.lhs)
        yield from iter_subformulas(f.rhs)


def top_level_literals(f: Formula) -> frozenset[tuple[str, bool]]:
    """Literals on the Boolean top level (not guarded by a temporal operator)."""
    acc: set[tuple[str, bool]] = set()
    _collect_actl(f, acc)
    return frozenset(acc)


def _collect_actl(f: Formula, acc: set) -> None:
    if isinstance(f, Lit):
        acc.add((f.prop, f.positive))
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            _collect_actl(p, acc)


def substitute_top(f: Formula, prop: str, value: bool) -> Formula:
    """Replace prop by a constant at the Boolean top level only, folding as we go."""
    if isinstance(f, Lit):
        if f.prop != prop:
            return f
        return TRUE if f.positive == value else FALSE
    if isinstance(f, And):
        return conj(substitute_top(p, prop, value) for p in f.parts)
    if isinstance(f, Or):
        return disj(substitute_top(p, prop, value) for p in f.parts)
    return f


def rename_timers(f: Formula, mapping: dict) -> Formula:
    """Rename timer bounds (numeric bounds pass through untouched)."""

    def bound(b):
        return b if isinstance(b, int) else mapping.get(b, b)

    if isinstance(f, Next):
        return Next(bound(f.bound), rename_timers(f.sub, mapping))
    if isinstance(f, Eventually):
        return Eventually(bound(f.bound), rename_timers(f.sub, mapping))
    if isinstance(f, BoundedWeak):
        return BoundedWeak(bound(f.bound),
                           rename_timers(f.lhs, mapping), rename_timers(f.rhs, mapping))
    if isinstance(f, Weak):
        return Weak(rename_timers(f.lhs, mapping), rename_timers(f.rhs, mapping))
    if isinstance(f, And):
        return conj(rename_timers(p, mapping) for p in f.parts)
    if isinstance(f, Or):
        return disj(rename_timers(p, mapping) for p in f.parts)
    return f

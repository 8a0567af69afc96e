"""Reference semantics: trace satisfaction, one-step expansion, bounded-game oracle.

These are the independent checking tools of the package.  The lasso
evaluator implements the satisfaction relation directly over ultimately
periodic words; ``expand`` implements the one-step expansion law used both
here and (in timer-instrumented form) by the game construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import chain, combinations
from typing import Iterable

from .formula import (
    FALSE,
    TRUE,
    And,
    BoundedWeak,
    Eventually,
    FalseF,
    Formula,
    Lit,
    Next,
    Or,
    TimerId,
    TrueF,
    Weak,
    conj,
    disj,
)

Letter = frozenset


@dataclass(frozen=True)
class Lasso:
    """Ultimately periodic word stem.loop^omega, a finite presentation of an infinite trace."""

    stem: tuple[Letter, ...]
    loop: tuple[Letter, ...]

    def __post_init__(self):
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def letter(self, k: int) -> Letter:
        s = len(self.stem)
        if k < s:
            return self.stem[k]
        return self.loop[(k - s) % len(self.loop)]

    def canon(self, k: int) -> int:
        s = len(self.stem)
        if k < s:
            return k
        return s + (k - s) % len(self.loop)


def holds(f: Formula, trace: Lasso, k: int = 0, _memo=None) -> bool:
    """Satisfaction of f by the trace at position k (numeric bounds only)."""
    if _memo is None:
        _memo = {}
    k = trace.canon(k)
    key = (f, k)
    if key in _memo:
        val = _memo[key]
        if val is None:
            # Cyclic dependency: only unbounded weak-until can self-depend,
            # and a cycle of undischarged obligations means lhs held forever.
            return True
        return val
    _memo[key] = None
    val = _holds(f, trace, k, _memo)
    _memo[key] = val
    return val


def _holds(f: Formula, trace: Lasso, k: int, memo) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Lit):
        return (f.prop in trace.letter(k)) == f.positive
    if isinstance(f, And):
        return all(holds(p, trace, k, memo) for p in f.parts)
    if isinstance(f, Or):
        return any(holds(p, trace, k, memo) for p in f.parts)
    if isinstance(f, Next):
        return holds(f.sub, trace, k + _num(f.bound), memo)
    if isinstance(f, Eventually):
        n = _num(f.bound)
        return any(holds(f.sub, trace, k + i, memo) for i in range(n + 1))
    if isinstance(f, BoundedWeak):
        n = _num(f.bound)
        for j in range(n + 1):
            if holds(f.rhs, trace, k + j, memo):
                return True
            if not holds(f.lhs, trace, k + j, memo):
                return False
        return True
    if isinstance(f, Weak):
        return (holds(f.rhs, trace, k, memo)
                or (holds(f.lhs, trace, k, memo) and holds(f, trace, k + 1, memo)))
    raise TypeError(f"unknown formula node {f!r}")


def _num(b) -> int:
    if isinstance(b, TimerId):
        raise ValueError("reference semantics is defined on numeric bounds only")
    return b


def expand(f: Formula, m: Letter) -> Formula:
    """One-step expansion under letter m, with constant folding at each composite.

    Top-level literals are replaced by constants; bounded operators unroll
    with their bound decremented; unbounded weak-until unrolls into itself.
    """
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Lit):
        return TRUE if (f.prop in m) == f.positive else FALSE
    if isinstance(f, And):
        return conj(expand(p, m) for p in f.parts)
    if isinstance(f, Or):
        return disj(expand(p, m) for p in f.parts)
    if isinstance(f, Next):
        n = _num(f.bound)
        if n == 0:
            return expand(f.sub, m)
        return Next(n - 1, f.sub)
    if isinstance(f, Eventually):
        n = _num(f.bound)
        if n == 0:
            return expand(f.sub, m)
        return disj([expand(f.sub, m), Eventually(n - 1, f.sub)])
    if isinstance(f, BoundedWeak):
        n = _num(f.bound)
        if n == 0:
            return disj([expand(f.rhs, m), expand(f.lhs, m)])
        return disj([expand(f.rhs, m), conj([expand(f.lhs, m), BoundedWeak(n - 1, f.lhs, f.rhs)])])
    if isinstance(f, Weak):
        return disj([expand(f.rhs, m), conj([expand(f.lhs, m), f])])
    raise TypeError(f"unknown formula node {f!r}")


def violated_within(f: Formula, prefix: Iterable[Letter]) -> bool:
    """True iff iterated expansion over the prefix reaches false."""
    g = f
    if isinstance(g, FalseF):
        return True
    for m in prefix:
        g = expand(g, m)
        if isinstance(g, FalseF):
            return True
    return False


def subsets(items) -> list[frozenset]:
    items = sorted(items)
    return [frozenset(c) for r in range(len(items) + 1) for c in combinations(items, r)]


def realizable_bounded(inputs: frozenset, outputs: frozenset, f: Formula) -> bool:
    """Realizability of a fully bounded formula by direct minimax over expansions.

    Independent of the game construction: the obligation is expanded one
    letter at a time, the environment picking inputs first.  Terminates
    because every expansion strictly shrinks some bound.
    """
    if not f.is_fully_bounded():
        raise ValueError("bounded-horizon oracle requires a fully bounded formula")
    in_choices = subsets(inputs)
    out_choices = subsets(outputs)
    memo: dict[Formula, bool] = {}

    def win(g: Formula) -> bool:
        if isinstance(g, TrueF):
            return True
        if isinstance(g, FalseF):
            return False
        cached = memo.get(g)
        if cached is not None:
            return cached
        res = all(
            any(win(expand(g, frozenset(chain(i, o)))) for o in out_choices)
            for i in in_choices
        )
        memo[g] = res
        return res

    return win(f)

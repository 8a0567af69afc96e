"""Realizability checking for safety LTL with bounded operators via countdown-timer games."""

from .formula import (
    FALSE,
    TRUE,
    And,
    BoundedWeak,
    Eventually,
    Formula,
    Lit,
    Next,
    Or,
    TimerId,
    Weak,
    cfold,
    conj,
    disj,
    simplify,
)
from .parser import Spec, SpecError, parse_formula, parse_spec
from .game import CountdownTimerGame, Effect, RESET, attractor_explicit, dump_game, load_game

__all__ = [
    "FALSE", "TRUE", "And", "BoundedWeak", "Eventually", "Formula", "Lit",
    "Next", "Or", "TimerId", "Weak", "cfold", "conj", "disj", "simplify",
    "Spec", "SpecError", "parse_formula", "parse_spec",
    "CountdownTimerGame", "Effect", "RESET", "attractor_explicit",
    "dump_game", "load_game",
]

"""Countdown-timer game structures, explicit semantics, and the explicit oracle.

A game is a finite set of locations with guarded transition branches.  Each
branch carries a partial truth assignment over propositions (unmentioned
propositions are don't-care) and a list of timeout arms; timeout sets
without an arm lead to the absorbing safe location.  Timers decrement every
step, time out at zero, and transition effects remap or reset them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product

from .formula import TimerId

RESET = None  # effect image meaning "set back to full duration"

TRUE_LOC = "true"
FALSE_LOC = "false"


@dataclass(frozen=True)
class Effect:
    """Total timer action: each timer is reset or inherits another timer's value.

    ``mapping`` assigns to every timer of the game the timer whose
    post-decrement value it receives, or ``None`` for a reset.  Non-reset
    images must preserve duration and be pairwise distinct.
    """

    mapping: tuple[tuple[TimerId, TimerId | None], ...]

    @staticmethod
    def of(partial: dict[TimerId, TimerId | None], timers) -> "Effect":
        full = {t: partial.get(t, RESET) for t in timers}
        return Effect(tuple(sorted(full.items(), key=lambda kv: kv[0].key)))

    @staticmethod
    def identity(timers) -> "Effect":
        return Effect.of({t: t for t in timers}, timers)

    @staticmethod
    def reset_all(timers) -> "Effect":
        return Effect.of({}, timers)

    @cached_property
    def _map(self) -> dict[TimerId, TimerId | None]:
        return dict(self.mapping)

    def image(self, t: TimerId) -> TimerId | None:
        return self._map.get(t, RESET)

    def as_dict(self) -> dict[TimerId, TimerId | None]:
        return self._map

    @cached_property
    def inverse(self) -> dict[TimerId, TimerId]:
        """source timer -> the timer it feeds; defined for non-reset images only."""
        return {src: dst for dst, src in self.mapping if src is not None}


def validate_effect(e: Effect, timers) -> str | None:
    """Return a description of the first violated side condition, or None."""
    mapping = e.as_dict()
    for t in timers:
        if t not in mapping:
            return f"effect not total: missing image for {t}"
    images = []
    for t, img in sorted(mapping.items(), key=lambda kv: kv[0].key):
        if img is RESET:
            continue
        if img.duration != t.duration:
            return f"duration mismatch: {t} -> {img}"
        images.append(img)
    if len(images) != len(set(images)):
        return "remapping is not injective"
    return None


@dataclass(frozen=True)
class Arm:
    timeouts: frozenset[TimerId]
    target: str
    effect: Effect


@dataclass(frozen=True)
class Branch:
    cond: tuple[tuple[str, bool], ...]  # partial assignment, sorted by prop
    arms: tuple[Arm, ...]

    def matches(self, i: frozenset, o: frozenset) -> bool:
        chosen = i | o
        return all((p in chosen) == v for p, v in self.cond)


@dataclass
class CountdownTimerGame:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    timers: tuple[TimerId, ...]
    locations: dict[str, tuple[Branch, ...]]  # insertion order = construction order
    initial: str
    unsafe: frozenset[str] = frozenset({FALSE_LOC})
    approximate: bool = False  # assumptions tracked by approximation

    def __post_init__(self):
        for loc in (TRUE_LOC, FALSE_LOC):
            self.locations.setdefault(loc, ())
        self.validate()

    @property
    def durations(self) -> dict[TimerId, int]:
        return {t: t.duration for t in self.timers}

    @cached_property
    def timer_index(self) -> dict[TimerId, int]:
        return {t: n for n, t in enumerate(self.timers)}

    def validate(self) -> None:
        timer_set = set(self.timers)
        if self.initial not in self.locations:
            raise ValueError(f"initial location {self.initial!r} undeclared")
        for u in self.unsafe:
            if u not in self.locations:
                raise ValueError(f"unsafe location {u!r} undeclared")
        declared = set(self.inputs) | set(self.outputs)
        for loc, branches in self.locations.items():
            for br in branches:
                for prop, _ in br.cond:
                    if prop not in declared:
                        raise ValueError(f"undeclared proposition {prop!r} in branch of {loc!r}")
                seen = set()
                for arm in br.arms:
                    if not arm.timeouts <= timer_set:
                        raise ValueError(f"undeclared timer in timeout set at {loc!r}")
                    if arm.timeouts in seen:
                        raise ValueError(f"duplicate timeout arm at {loc!r}")
                    seen.add(arm.timeouts)
                    if arm.target not in self.locations:
                        raise ValueError(f"branch target {arm.target!r} undeclared")
                    problem = validate_effect(arm.effect, self.timers)
                    if problem:
                        raise ValueError(f"invalid effect at {loc!r}: {problem}")

    def resolve(self, loc: str, i: frozenset, o: frozenset,
                timeouts: frozenset) -> tuple[str, Effect]:
        """The (successor, effect) of one transition lookup.

        The absorbing locations loop to themselves; elsewhere a timeout set
        without an explicit arm leads to the safe absorbing location.
        """
        if loc in (TRUE_LOC, FALSE_LOC):
            return loc, Effect.reset_all(self.timers)
        for br in self.locations[loc]:
            if br.matches(i, o):
                for arm in br.arms:
                    if arm.timeouts == timeouts:
                        return arm.target, arm.effect
                return TRUE_LOC, Effect.reset_all(self.timers)
        raise ValueError(f"no branch of {loc!r} covers i={sorted(i)} o={sorted(o)}")


Valuation = tuple[int, ...]  # aligned with game.timers


def initial_valuation(game: CountdownTimerGame) -> Valuation:
    return tuple(t.duration for t in game.timers)


def step_valuation(v: Valuation) -> Valuation:
    """Pointwise decrement clipped at zero."""
    return tuple(max(0, x - 1) for x in v)


def trans(game: CountdownTimerGame, state: tuple[str, Valuation],
          i: frozenset, o: frozenset) -> tuple[str, Valuation]:
    """One step of the explicit semantics: decrement, time out, branch, apply effect."""
    loc, v = state
    w = step_valuation(v)
    timeouts = frozenset(t for t, x in zip(game.timers, w) if x == 0)
    target, effect = game.resolve(loc, i, o, timeouts)
    idx = game.timer_index
    v2 = tuple(
        t.duration if effect.image(t) is RESET else w[idx[effect.image(t)]]
        for t in game.timers
    )
    return target, v2


def _subsets(names) -> list[frozenset]:
    names = sorted(names)
    out = []
    for bits in range(1 << len(names)):
        out.append(frozenset(n for k, n in enumerate(names) if bits >> k & 1))
    return out


def explicit_reachable(game: CountdownTimerGame, budget: int = 10**7) -> set:
    """BFS over the explicit semantics from the initial state."""
    moves = [(i, o) for i in _subsets(game.inputs) for o in _subsets(game.outputs)]
    start = (game.initial, initial_valuation(game))
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for st in frontier:
            for i, o in moves:
                succ = trans(game, st, i, o)
                if succ not in seen:
                    seen.add(succ)
                    if len(seen) > budget:
                        raise RuntimeError("explicit state budget exceeded")
                    nxt.append(succ)
        frontier = nxt
    return seen


def running_valuations(game: CountdownTimerGame) -> list[Valuation]:
    """All valuations with every timer in [1, duration].

    This is the state space actually inhabited at the start of a step: the
    initial valuation is all-at-duration and effects only propagate values
    of timers that did not just time out, so a zero is never carried across
    a transition.  The symbolic backward increment enumerates exactly these
    states, so the oracle works on the same space.
    """
    return [tuple(v) for v in product(*(range(1, t.duration + 1) for t in game.timers))]


def attractor_explicit(game: CountdownTimerGame, budget: int = 10**7,
                       space: str = "running") -> tuple[set, str]:
    """Environment attractor of the unsafe locations over the explicit game.

    ``space`` picks the state space: "running" is every location paired with
    every valuation in [1, d] per timer (the values a timer shows at the
    start of a step); "reachable" restricts to states reachable from the
    initial one, which decides the same winner on far fewer states.
    Returns the attractor and the winner: "ENV" iff the initial state is
    attracted.  Safety games are determined, so this is total.
    """
    if space == "running":
        vals = running_valuations(game)
        n_states = len(vals) * len(game.locations)
        if n_states > budget:
            raise RuntimeError(f"explicit attractor budget exceeded: {n_states} states")
        states = {(loc, v) for loc in game.locations for v in vals}
    elif space == "reachable":
        states = explicit_reachable(game, budget)
    else:
        raise ValueError(f"unknown state space {space!r}")
    ins = _subsets(game.inputs)
    outs = _subsets(game.outputs)

    attr: set = {st for st in states if st[0] in game.unsafe}
    pending = [st for st in states if st[0] not in game.unsafe]
    succ_cache: dict = {}

    def attracted(st) -> bool:
        # Unsafe locations are attracted at any valuation, including ones
        # outside the chosen state space.
        return st[0] in game.unsafe or st in attr

    def successors(st):
        cached = succ_cache.get(st)
        if cached is None:
            cached = [[trans(game, st, i, o) for o in outs] for i in ins]
            succ_cache[st] = cached
        return cached

    changed = True
    while changed:
        changed = False
        remaining = []
        for st in pending:
            if any(all(attracted(s) for s in row) for row in successors(st)):
                attr.add(st)
                changed = True
            else:
                remaining.append(st)
        pending = remaining
    start = (game.initial, initial_valuation(game))
    winner = "ENV" if start in attr else "SYSTEM"
    return attr, winner


# -- text dump / load --------------------------------------------------------


def _timer_text(t: TimerId) -> str:
    return str(t)


def _parse_timer(tok: str, line_no: int) -> TimerId:
    m = re.fullmatch(r"t(\d+)\^(\d+)", tok)
    if not m:
        raise ValueError(f"line {line_no}: bad timer token {tok!r}")
    return TimerId(int(m.group(2)), int(m.group(1)))


def dump_game(game: CountdownTimerGame) -> str:
    """Line-oriented text form; bit-exact round trip with load_game."""
    lines: list[str] = []
    lines.append(f"INPUTS {' '.join(game.inputs)}".rstrip())
    lines.append(f"OUTPUTS {' '.join(game.outputs)}".rstrip())
    for t in game.timers:
        lines.append(f"TIMER {t.index} {t.duration}")
    ids = {loc: f"L{k}" for k, loc in enumerate(game.locations)}
    for loc in game.locations:
        lines.append(f"LOC {ids[loc]} {loc}")
    lines.append(f"INIT {ids[game.initial]}")
    for u in sorted(game.unsafe):
        lines.append(f"UNSAFE {ids[u]}")
    for loc, branches in game.locations.items():
        for br in branches:
            cond = " & ".join((p if v else f"!{p}") for p, v in br.cond) or "-"
            if not br.arms:
                lines.append(f"EDGE {ids[loc]} | {cond} | - | - | -")
                continue
            for arm in br.arms:
                tos = "{" + ",".join(sorted(map(_timer_text, arm.timeouts))) + "}"
                eff = " ".join(
                    f"{_timer_text(t)}->{_timer_text(img) if img is not None else 'RESET'}"
                    for t, img in arm.effect.mapping
                )
                lines.append(f"EDGE {ids[loc]} | {cond} | {tos} | {ids[arm.target]} | {eff}")
    return "\n".join(lines) + "\n"


def load_game(text: str) -> CountdownTimerGame:
    inputs: list[str] = []
    outputs: list[str] = []
    timers: list[TimerId] = []
    loc_names: dict[str, str] = {}
    loc_order: list[str] = []
    initial: str | None = None
    unsafe: list[str] = []
    edges: list[tuple[int, str, str, str, str, str]] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "INPUTS":
            inputs = rest.split()
        elif head == "OUTPUTS":
            outputs = rest.split()
        elif head == "TIMER":
            idx, dur = rest.split()
            timers.append(TimerId(int(dur), int(idx)))
        elif head == "LOC":
            token, _, label = rest.partition(" ")
            loc_names[token] = label or token
            loc_order.append(token)
        elif head == "INIT":
            initial = rest.strip()
        elif head == "UNSAFE":
            unsafe.append(rest.strip())
        elif head == "EDGE":
            parts = [p.strip() for p in rest.split("|")]
            if len(parts) != 5:
                raise ValueError(f"line {no}: EDGE needs 5 fields")
            edges.append((no, *parts))
        else:
            raise ValueError(f"line {no}: unknown directive {head!r}")
    if initial is None:
        raise ValueError("missing INIT line")
    timers = sorted(set(timers), key=lambda t: t.key)
    branch_map: dict[str, dict[tuple, list[Arm]]] = {tok: {} for tok in loc_order}

    def loc_of(token: str, no: int) -> str:
        if token not in loc_names:
            raise ValueError(f"line {no}: undeclared location {token!r}")
        return loc_names[token]

    for no, src, cond_s, tos_s, dst_s, eff_s in edges:
        if cond_s == "-":
            cond: tuple = ()
        else:
            cond_items = []
            for lit in cond_s.split("&"):
                lit = lit.strip()
                neg = lit.startswith("!")
                cond_items.append((lit.lstrip("!"), not neg))
            cond = tuple(sorted(cond_items))
        if src not in loc_names:
            raise ValueError(f"line {no}: undeclared location {src!r}")
        arms = branch_map[src].setdefault(cond, [])
        if tos_s == "-":
            continue
        body = tos_s.strip("{}")
        tos = frozenset(_parse_timer(tok, no) for tok in body.split(",") if tok)
        mapping: dict[TimerId, TimerId | None] = {}
        if eff_s != "-":
            for pair in eff_s.split():
                lhs, _, rhs = pair.partition("->")
                src_t = _parse_timer(lhs, no)
                mapping[src_t] = None if rhs == "RESET" else _parse_timer(rhs, no)
        arms.append(Arm(tos, loc_of(dst_s, no), Effect.of(mapping, timers)))

    locations = {
        loc_names[tok]: tuple(
            Branch(cond, tuple(arms)) for cond, arms in branch_map[tok].items()
        )
        for tok in loc_order
    }
    return CountdownTimerGame(
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        timers=tuple(timers),
        locations=locations,
        initial=loc_of(initial, 0),
        unsafe=frozenset(loc_of(u, 0) for u in unsafe),
    )

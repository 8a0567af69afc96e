"""Translation of a specification into a countdown-timer game.

The builder explores locations reachable from the expanded guarantee.  One
transition is the composition: pick the move effects on top-level literals,
apply the chosen time-outs, compact timer indices (which yields the timer
effect), then re-expand and simplify.  Assumptions are tracked alongside as
residual formulas expanded step by step; a broken assumption releases the
system to the safe location, which makes environment wins inconclusive.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass

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
    iter_subformulas,
    rename_timers,
    simplify,
    substitute_top,
    top_level_literals,
)
from .game import Arm, Branch, CountdownTimerGame, Effect, FALSE_LOC, TRUE_LOC
from .parser import Spec
from .semantics import expand


class BuildBudgetExceeded(RuntimeError):
    pass


@dataclass
class BuildConfig:
    """Construction knobs: expansion policy, pruning toggles, worklist budget."""

    expansion: str = "hybrid"  # "hybrid" | "explicit" | "timers"
    prune_moves: bool = True  # early/worst-case decisions when picking moves
    prune_timeouts: bool = True  # partial-order pruning of timeout sets
    max_locations: int = 100_000
    hybrid_slack: int = 0  # added to the log2 index cutoff of the hybrid rule

    def __post_init__(self):
        if self.expansion not in ("hybrid", "explicit", "timers"):
            raise ValueError(f"unknown expansion policy {self.expansion!r}")
        if self.max_locations < 1:
            raise ValueError("worklist budget must be >= 1")


def hybrid_decide(duration: int, next_index: int = 0, rule: str = "hybrid",
                  slack: int = 0) -> str:
    """Choose explicit unrolling or a timer for a bound with the given duration.

    The default rule unrolls plain next (duration 1) and any introduction
    whose pool index would exceed the logarithm of the duration.
    """
    if rule == "explicit":
        return "explicit"
    if rule == "timers":
        return "timer"
    if duration <= 1:
        return "explicit"
    return "explicit" if next_index > int(math.log2(duration)) + slack else "timer"


# -- closure -----------------------------------------------------------------


def closure(phi: Formula) -> frozenset[Formula]:
    """All timer-instantiated temporal subformulas and literals reachable by expansion."""
    acc: set[Formula] = set()

    def cl(f: Formula) -> None:
        if isinstance(f, (Lit, TrueF, FalseF)):
            acc.update({f, TRUE, FALSE})
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                cl(p)
        elif isinstance(f, Next):
            cl(f.sub)
            n = _numeric(f.bound)
            acc.update(Next(TimerId(n, i), f.sub) for i in range(n + 1))
        elif isinstance(f, Eventually):
            cl(f.sub)
            n = _numeric(f.bound)
            acc.update(Eventually(TimerId(n + 1, i), f.sub) for i in range(n + 2))
        elif isinstance(f, BoundedWeak):
            cl(f.lhs)
            cl(f.rhs)
            n = _numeric(f.bound)
            acc.update(BoundedWeak(TimerId(n + 1, i), f.lhs, f.rhs) for i in range(n + 2))
        elif isinstance(f, Weak):
            cl(f.lhs)
            cl(f.rhs)
            acc.add(f)
        else:  # pragma: no cover
            raise TypeError(f"unknown formula node {f!r}")

    cl(phi)
    return frozenset(acc)


def _numeric(bound) -> int:
    if isinstance(bound, TimerId):
        raise ValueError("closure is defined on numeric-bounded formulas")
    if bound < 1:
        raise ValueError("zero bounds are removed during desugaring")
    return bound


# -- move selection (the decision-tree rules) ---------------------------------


def tree_leaves(phi: Formula, inputs: frozenset[str], outputs: frozenset[str],
                prune: bool = True) -> list[tuple[dict[str, bool], Formula]]:
    """Decision leaves of one step: (partial assignment, remaining formula).

    The leaf conditions partition the full move space; propositions absent
    from a condition are don't-care.  With pruning enabled, dominated system
    choices collapse to false and adverse environment choices are fixed
    without branching.
    """
    leaves: list[tuple[dict[str, bool], Formula]] = []

    def explore(f: Formula, cond: dict[str, bool]) -> None:
        lits = top_level_literals(f)
        if isinstance(f, (TrueF, FalseF)) or not lits:
            leaves.append((cond, f))
            return
        polarity: dict[str, set[bool]] = {}
        for prop, pos in sorted(lits):
            polarity.setdefault(prop, set()).add(pos)

        if prune:
            if isinstance(f, Or):
                winning = sorted(
                    (p.prop, p.positive) for p in f.parts
                    if isinstance(p, Lit) and p.prop in outputs
                )
                if winning:
                    prop, pos = winning[0]
                    leaves.append(({**cond, prop: pos}, TRUE))
                    leaves.append(({**cond, prop: not pos}, FALSE))
                    return
            if isinstance(f, And) and any(
                isinstance(p, Lit) and p.prop in inputs for p in f.parts
            ):
                leaves.append((cond, FALSE))
                return
            for prop in sorted(polarity):
                if prop in outputs and len(polarity[prop]) == 1:
                    pos = next(iter(polarity[prop]))
                    explore(substitute_top(f, prop, pos), {**cond, prop: pos})
                    leaves.append(({**cond, prop: not pos}, FALSE))
                    return
            for prop in sorted(polarity):
                if prop in inputs and len(polarity[prop]) == 1:
                    pos = next(iter(polarity[prop]))
                    explore(substitute_top(f, prop, not pos), cond)
                    return

        for prop in sorted(polarity):
            if prop in inputs:
                for val in (False, True):
                    explore(substitute_top(f, prop, val), {**cond, prop: val})
                return
        for prop in sorted(polarity):
            for val in (False, True):
                explore(substitute_top(f, prop, val), {**cond, prop: val})
            return

    explore(phi, {})
    return leaves


def tree(phi: Formula, i: frozenset, o: frozenset, inputs: frozenset[str],
         outputs: frozenset[str], prune: bool = True) -> Formula:
    """Effect of the move (i, o) on the current step's literals."""
    chosen = i | o
    for cond, leaf in tree_leaves(phi, inputs, outputs, prune):
        if all((p in chosen) == v for p, v in cond.items()):
            return leaf
    raise AssertionError("decision leaves must cover the move space")


# -- time-outs, squeezing, expansion ------------------------------------------


def timeout_rewrite(timeouts: frozenset[TimerId], f: Formula) -> Formula:
    """Rewrites for expired timers: next releases its body, eventually fails, weak succeeds."""
    if isinstance(f, Next):
        sub = timeout_rewrite(timeouts, f.sub)
        return sub if f.bound in timeouts else Next(f.bound, sub)
    if isinstance(f, Eventually):
        if f.bound in timeouts:
            return FALSE
        return Eventually(f.bound, timeout_rewrite(timeouts, f.sub))
    if isinstance(f, BoundedWeak):
        if f.bound in timeouts:
            return TRUE
        return BoundedWeak(f.bound, timeout_rewrite(timeouts, f.lhs),
                           timeout_rewrite(timeouts, f.rhs))
    if isinstance(f, Weak):
        return Weak(timeout_rewrite(timeouts, f.lhs), timeout_rewrite(timeouts, f.rhs))
    if isinstance(f, And):
        return conj(timeout_rewrite(timeouts, p) for p in f.parts)
    if isinstance(f, Or):
        return disj(timeout_rewrite(timeouts, p) for p in f.parts)
    return f


def timeout(timeouts: frozenset[TimerId], f: Formula) -> Formula:
    """Time-out handling including the redirection of impossible time-outs.

    Only index-0 timers of a running duration can expire; any other set is
    routed to the safe location.  Duration-1 timers expire every step whether
    or not they occur in the formula.
    """
    live = f.timers
    for t in timeouts:
        if t.duration > 1 and (t.index != 0 or t not in live):
            return TRUE
        if t.duration == 1 and t.index != 0 and t not in live:
            return TRUE
    return timeout_rewrite(timeouts, f)


def squeeze(f: Formula) -> tuple[dict[TimerId, TimerId], Formula]:
    """Compact timer indices; returns (new timer -> surviving old timer, renamed formula).

    Timers missing from the map are reset.  Per duration the surviving
    timers keep their relative order, re-indexed from zero.
    """
    by_duration: dict[int, list[TimerId]] = {}
    for t in f.timers:
        by_duration.setdefault(t.duration, []).append(t)
    remap: dict[TimerId, TimerId] = {}
    renaming: dict[TimerId, TimerId] = {}
    for d, ts in by_duration.items():
        for j, old in enumerate(sorted(ts, key=lambda t: t.index)):
            new = TimerId(d, j)
            remap[new] = old
            renaming[old] = new
    return remap, rename_timers(f, renaming)


@dataclass(frozen=True)
class _FreshBound:
    """Placeholder for a timer introduced this step; renamed after compaction."""

    duration: int

    def __str__(self) -> str:
        return f"t?^{self.duration}"


def _step_rewrite(f: Formula, timeouts: frozenset[TimerId], config: BuildConfig,
                  next_index: dict[int, int], fresh_root: bool = False):
    """One traversal combining time-out rewrites and expansion.

    Obligations are anchored in time: a node freshly exposed by unfolding a
    weak-until core, an expired next, or an inlined one-step next belongs to
    the successor step, so its numeric bound is kept in full (a new timer
    starts at its whole duration).  Numeric bounds already at the top level
    belong to the previous step and are reduced by one instead.  All fresh
    introductions of one duration in one step share one timer.

    Returns (formula-with-placeholders, used-placeholders) or (TRUE, ...)
    when an introduction would run past the index pool.
    """
    fresh: dict[int, _FreshBound] = {}
    overflow = False

    def placeholder(duration: int) -> _FreshBound | None:
        nonlocal overflow
        have = fresh.get(duration)
        if have is not None:
            return have
        if next_index.get(duration, 0) > duration:
            overflow = True
            return None
        mark = _FreshBound(duration)
        fresh[duration] = mark
        return mark

    def wants_timer(duration: int) -> bool:
        if duration in fresh:
            return True
        idx = next_index.get(duration, 0)
        return hybrid_decide(duration, idx, config.expansion, config.hybrid_slack) == "timer"

    def rec(g: Formula, is_fresh: bool) -> Formula:
        if isinstance(g, (Lit, TrueF, FalseF)):
            return g
        if isinstance(g, And):
            return conj(rec(p, is_fresh) for p in g.parts)
        if isinstance(g, Or):
            return disj(rec(p, is_fresh) for p in g.parts)
        if isinstance(g, Next):
            b = g.bound
            if isinstance(b, TimerId):
                return rec(g.sub, True) if b in timeouts else g
            if is_fresh:
                if wants_timer(b):
                    t = placeholder(b)
                    return TRUE if t is None else Next(t, g.sub)
                return g
            return rec(g.sub, True) if b == 1 else Next(b - 1, g.sub)
        if isinstance(g, Eventually):
            b = g.bound
            if isinstance(b, TimerId):
                if b in timeouts:
                    return FALSE
                return disj([rec(g.sub, True), g])
            if is_fresh:
                if wants_timer(b + 1):
                    t = placeholder(b + 1)
                    return TRUE if t is None else disj([rec(g.sub, True), Eventually(t, g.sub)])
                if b == 0:
                    return rec(g.sub, True)
                return disj([rec(g.sub, True), g])
            if b == 0:
                return FALSE
            return disj([rec(g.sub, True), Eventually(b - 1, g.sub)])
        if isinstance(g, BoundedWeak):
            b = g.bound
            if isinstance(b, TimerId):
                if b in timeouts:
                    return TRUE
                return disj([rec(g.rhs, True), conj([rec(g.lhs, True), g])])
            if is_fresh:
                if wants_timer(b + 1):
                    t = placeholder(b + 1)
                    if t is None:
                        return TRUE
                    return disj([rec(g.rhs, True),
                                 conj([rec(g.lhs, True), BoundedWeak(t, g.lhs, g.rhs)])])
                if b == 0:
                    return disj([rec(g.rhs, True), rec(g.lhs, True)])
                return disj([rec(g.rhs, True), conj([rec(g.lhs, True), g])])
            if b == 0:
                return TRUE
            return disj([rec(g.rhs, True),
                         conj([rec(g.lhs, True), BoundedWeak(b - 1, g.lhs, g.rhs)])])
        if isinstance(g, Weak):
            return disj([rec(g.rhs, True), conj([rec(g.lhs, True), g])])
        raise TypeError(f"unknown formula node {g!r}")  # pragma: no cover

    out = rec(f, fresh_root)
    if overflow:
        return TRUE, {}
    return out, fresh


def _compact(f: Formula, fresh: dict[int, _FreshBound]):
    """Re-index surviving timers from zero and slot placeholders after them.

    Returns (formula, effect: new timer -> old timer, introduced timers),
    or TRUE-redirect when a placeholder would need an index past its pool.
    """
    by_duration: dict[int, list[TimerId]] = {}
    for t in f.timers:
        by_duration.setdefault(t.duration, []).append(t)
    renaming: dict = {}
    effect: dict[TimerId, TimerId] = {}
    introduced: set[TimerId] = set()
    for d, ts in by_duration.items():
        for j, old in enumerate(sorted(ts, key=lambda t: t.index)):
            new = TimerId(d, j)
            renaming[old] = new
            effect[new] = old
    used = {mark for g in iter_subformulas(f)
            for mark in [getattr(g, "bound", None)] if isinstance(mark, _FreshBound)}
    for mark in used:
        idx = len(by_duration.get(mark.duration, ()))
        if idx > mark.duration:
            return TRUE, {}, frozenset()
        t = TimerId(mark.duration, idx)
        renaming[mark] = t
        introduced.add(t)
    return rename_timers(f, renaming), effect, frozenset(introduced)


def step_formula(leaf: Formula, timeouts: frozenset[TimerId], config: BuildConfig):
    """The full one-transition formula pipeline after the move was chosen.

    Applies time-outs, expands with timer introduction, compacts indices.
    Returns (canonical successor formula, effect new->old, introduced timers).
    """
    survivors: dict[int, int] = {}
    for t in leaf.timers:
        if t not in timeouts:
            survivors[t.duration] = survivors.get(t.duration, 0) + 1
    g1, fresh = _step_rewrite(leaf, timeouts, config, dict(survivors))
    g2, effect, introduced = _compact(g1, fresh)
    phi = simplify(g2)
    live = phi.timers
    return phi, {n: o for n, o in effect.items() if n in live}, introduced & live


def intro_expand(f: Formula, config: BuildConfig | None = None) -> tuple[Formula, frozenset[TimerId]]:
    """Expansion of newly exposed obligations with timer introduction.

    This is the expansion step as applied to the initial formula or to the
    post-squeeze formula of a transition: unguarded temporal operators are
    unfolded, numeric bounds receive the timer with the next unused index of
    their duration (or stay numeric per the hybrid rule).
    """
    config = config or BuildConfig()
    next_index: dict[int, int] = {}
    for t in f.timers:
        next_index[t.duration] = max(next_index.get(t.duration, 0), t.index + 1)
    out, fresh = _step_rewrite(f, frozenset(), config, dict(next_index), fresh_root=True)
    renaming: dict = {}
    introduced: set[TimerId] = set()
    for d, mark in fresh.items():
        idx = next_index.get(d, 0)
        if idx > d:
            return TRUE, frozenset()
        t = TimerId(d, idx)
        renaming[mark] = t
        introduced.add(t)
    out = rename_timers(out, renaming)
    return out, frozenset(t for t in introduced if t in out.timers)


# -- the worklist construction -------------------------------------------------


@dataclass
class _Node:
    phi: Formula
    residuals: tuple[Formula, ...]
    facts: frozenset[tuple[TimerId, TimerId]]  # (a, b): a runs strictly below b
    branches: tuple[Branch, ...] | None = None


@dataclass
class BuildStats:
    locations: int = 0
    timers: int = 0
    gen_seconds: float = 0.0
    approximate: bool = False
    pruned_timeout_sets: int = 0


@dataclass
class BuildResult:
    game: CountdownTimerGame
    stats: BuildStats


def node_id(phi: Formula, residuals: tuple[Formula, ...]) -> str:
    if not residuals:
        return phi.text
    return phi.text + " @ " + " @ ".join(r.text for r in residuals)


def build_game(spec: Spec, config: BuildConfig | None = None,
               deadline: float | None = None) -> BuildResult:
    """Worklist exploration of the reachable locations of the timer game."""
    config = config or BuildConfig()
    t_start = time.perf_counter()
    inputs = spec.input_set
    outputs = spec.output_set
    stats = BuildStats(approximate=bool(spec.assumptions))

    registry: dict[str, _Node] = {}
    order: list[str] = []
    queue: deque[str] = deque()

    def register(phi: Formula, residuals: tuple[Formula, ...],
                 facts: frozenset) -> str:
        if isinstance(phi, FalseF):
            return FALSE_LOC
        if isinstance(phi, TrueF):
            return TRUE_LOC
        nid = node_id(phi, residuals)
        node = registry.get(nid)
        if node is None:
            if len(registry) >= config.max_locations:
                raise BuildBudgetExceeded(
                    f"location budget {config.max_locations} exceeded")
            registry[nid] = _Node(phi, residuals, facts)
            order.append(nid)
            queue.append(nid)
        else:
            merged = node.facts & facts
            if merged != node.facts:
                node.facts = merged
                if node.branches is not None:
                    node.branches = None
                    queue.append(nid)
        return nid

    phi0_raw, intro0 = intro_expand(spec.guarantee, config)
    phi0 = simplify(phi0_raw)
    facts0 = _introduction_facts(phi0, intro0, frozenset())
    initial = register(phi0, spec.assumptions, facts0)

    def successor_facts(old_facts, remap, succ_phi, introduced):
        renaming = {old: new for new, old in remap.items()}
        live = succ_phi.timers
        carried = frozenset(
            (renaming[a], renaming[b])
            for a, b in old_facts
            if a in renaming and b in renaming
            and renaming[a] in live and renaming[b] in live
        )
        return carried | _introduction_facts(succ_phi, introduced, frozenset())

    def expand_node(nid: str) -> tuple[Branch, ...]:
        node = registry[nid]
        phi = node.phi
        live = phi.timers
        candidates = sorted(
            (t for t in live if t.duration > 1 and t.index == 0),
            key=lambda t: t.key,
        )
        d1_live = frozenset(t for t in live if t.duration == 1)
        blocked = {b for _, b in node.facts} if config.prune_timeouts else set()

        branches: list[Branch] = []
        for cond, leaf in tree_leaves(phi, inputs, outputs, config.prune_moves):
            residual_props = sorted(
                {p for r in node.residuals for p, _ in top_level_literals(r)}
                - cond.keys()
            )
            for bits in range(1 << len(residual_props)):
                full_cond = dict(cond)
                for k, prop in enumerate(residual_props):
                    full_cond[prop] = bool(bits >> k & 1)
                letter = frozenset(p for p, v in full_cond.items() if v)
                new_res = tuple(
                    simplify(expand(r, letter)) for r in node.residuals
                )
                cond_t = tuple(sorted(full_cond.items()))
                if any(isinstance(r, FalseF) for r in new_res):
                    branches.append(Branch(cond_t, ()))  # assumption broken
                    continue
                arms: list[Arm] = []
                for bits_t in range(1 << len(candidates)):
                    chosen = frozenset(
                        t for k, t in enumerate(candidates) if bits_t >> k & 1
                    )
                    if blocked & chosen:
                        stats.pruned_timeout_sets += 1
                        continue
                    effective = chosen | d1_live
                    if isinstance(leaf, FalseF):
                        arms.append(Arm(effective, FALSE_LOC, Effect.of({}, ())))
                        continue
                    succ_phi, eff, introduced = step_formula(leaf, effective, config)
                    facts = successor_facts(node.facts, eff, succ_phi, introduced)
                    target = register(succ_phi, new_res, facts)
                    arms.append(Arm(effective, target, _sparse_effect(eff)))
                branches.append(Branch(cond_t, tuple(arms)))
        return tuple(branches)

    while queue:
        if deadline is not None and time.perf_counter() > deadline:
            raise BuildBudgetExceeded("construction deadline exceeded")
        nid = queue.popleft()
        node = registry[nid]
        if node.branches is not None:
            continue
        node.branches = expand_node(nid)

    # Assemble: collect the timer universe, then totalize effects and
    # complete every arm's timeout set with the always-expiring duration-1 timers.
    universe: set[TimerId] = set()
    for nid in order:
        universe |= registry[nid].phi.timers
        for br in registry[nid].branches or ():
            for arm in br.arms:
                for new, old in arm.effect.mapping:
                    universe.add(new)
                    if old is not None:
                        universe.add(old)
                universe |= arm.timeouts
    timers = tuple(sorted(universe, key=lambda t: t.key))
    d1_all = frozenset(t for t in timers if t.duration == 1)

    locations: dict[str, tuple[Branch, ...]] = {}
    for nid in order:
        node = registry[nid]
        fixed = []
        for br in node.branches or ():
            arms = tuple(
                Arm(arm.timeouts | d1_all, arm.target,
                    Effect.of(dict(arm.effect.mapping), timers))
                for arm in br.arms
            )
            fixed.append(Branch(br.cond, arms))
        locations[nid] = tuple(fixed)

    game = CountdownTimerGame(
        inputs=tuple(sorted(inputs)),
        outputs=tuple(sorted(outputs)),
        timers=timers,
        locations=locations,
        initial=initial,
        unsafe=frozenset({FALSE_LOC}),
        approximate=stats.approximate,
    )
    stats.locations = len(game.locations)
    stats.timers = len(timers)
    stats.gen_seconds = time.perf_counter() - t_start
    return BuildResult(game, stats)


def _sparse_effect(mapping: dict[TimerId, TimerId]) -> Effect:
    return Effect(tuple(sorted(mapping.items(), key=lambda kv: kv[0].key)))


def _introduction_facts(phi: Formula, introduced: frozenset[TimerId],
                        base: frozenset) -> frozenset:
    """New timers start at full duration, so anything shorter-lived runs below them."""
    live = phi.timers
    facts = set(base)
    for n in introduced:
        if n not in live:
            continue
        for x in live:
            if x is not n and x.duration < n.duration:
                facts.add((x, n))
    return frozenset(facts)

"""Backward symbolic solving of countdown-timer games.

The environment attractor is computed per location over the symbolic domain,
iterating the enforceable-predecessor to a syntactic fixpoint.  Runs can
over- or under-approximate timer values away from the borders with a
threshold k; the driver doubles k until one of the one-sided runs is
conclusive, which always happens because the approximations become exact
once k exceeds half the largest duration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import regions as rg
from .game import CountdownTimerGame, FALSE_LOC, TRUE_LOC
from .regions import TimerSpace


class SolveBudgetExceeded(RuntimeError):
    pass


@dataclass
class SolverConfig:
    k0: int = 1
    max_iterations: int = 1_000_000
    deadline: float | None = None  # perf_counter timestamp


@dataclass
class RunInfo:
    mode: str
    k: int
    iterations: int = 0
    hit_initial: bool = False
    fixpoint: bool = False
    peak_regions: int = 0


@dataclass
class SolveStats:
    k_final: int = 0
    runs: list[RunInfo] = field(default_factory=list)
    locations: int = 0
    timers: int = 0
    seconds: float = 0.0


@dataclass
class Verdict:
    status: str  # REALIZABLE | UNREALIZABLE | UNKNOWN
    stats: SolveStats | None = None
    note: str = ""

    @property
    def exit_code(self) -> int:
        return {"REALIZABLE": 0, "UNREALIZABLE": 1}.get(self.status, 2)


@dataclass(frozen=True)
class _Plan:
    """Per-location move table: assignments over the mentioned propositions."""

    ins: tuple[str, ...]
    outs: tuple[str, ...]
    table: tuple[tuple[tuple, ...], ...]  # [i_bits][o_bits] -> arms


def _location_plans(game: CountdownTimerGame) -> dict[str, _Plan]:
    plans = {}
    for loc, branches in game.locations.items():
        if loc in (TRUE_LOC, FALSE_LOC):
            continue
        mentioned = {p for br in branches for p, _ in br.cond}
        ins = tuple(sorted(mentioned & set(game.inputs)))
        outs = tuple(sorted(mentioned & set(game.outputs)))
        table = []
        for bi in range(1 << len(ins)):
            row = []
            i_set = frozenset(p for k, p in enumerate(ins) if bi >> k & 1)
            for bo in range(1 << len(outs)):
                o_set = frozenset(p for k, p in enumerate(outs) if bo >> k & 1)
                arms: tuple = ()
                for br in branches:
                    if br.matches(i_set, o_set):
                        arms = br.arms
                        break
                else:
                    raise ValueError(f"incomplete branch cover at {loc!r}")
                row.append(arms)
            table.append(tuple(row))
        plans[loc] = _Plan(ins, outs, tuple(table))
    return plans


def sym_trans(space: TimerSpace, arm, target_set: rg.SymbolicSet) -> rg.SymbolicSet:
    """Backward application of one transition arm to a target set."""
    s = rg.eff_reset(space, arm.effect, target_set)
    s = rg.remap(space, arm.effect, s)
    s = rg.eff_to(space, arm.timeouts, s)
    return rg.inc(space, s)


def _cpre_location(space: TimerSpace, plan: _Plan,
                   attr: dict[str, rg.SymbolicSet],
                   cache: dict | None = None) -> rg.SymbolicSet:
    total = rg.EMPTY
    for row in plan.table:
        inner: rg.SymbolicSet | None = None
        for arms in row:
            acc = rg.EMPTY
            for arm in arms:
                target = attr[arm.target]
                if not target:
                    continue
                if cache is None:
                    pre = sym_trans(space, arm, target)
                else:
                    key = (arm, target)
                    pre = cache.get(key)
                    if pre is None:
                        pre = sym_trans(space, arm, target)
                        cache[key] = pre
                acc = rg.union(space, acc, pre)
            inner = acc if inner is None else rg.intersect(space, inner, acc)
            if not inner:
                break
        if inner:
            total = rg.union(space, total, inner)
    return total


def cpre_env(game: CountdownTimerGame, attr: dict[str, rg.SymbolicSet],
             mode: str = "exact", k: int = 1) -> dict[str, rg.SymbolicSet]:
    """One application of the symbolic enforceable predecessor, per location."""
    space = TimerSpace(game.timers)
    plans = _location_plans(game)
    out = {}
    for loc in game.locations:
        if loc in plans:
            s = _cpre_location(space, plans[loc], attr)
            if mode == "over":
                s = rg.over(space, k, s)
            elif mode == "under":
                s = rg.under(space, k, s)
            out[loc] = s
        else:
            out[loc] = rg.EMPTY
    return out


def attractor_symbolic(game: CountdownTimerGame, mode: str = "exact", k: int = 1,
                       config: SolverConfig | None = None,
                       stop_on_hit: bool = True) -> tuple[dict[str, rg.SymbolicSet], RunInfo]:
    """Iterate the attractor from the unsafe locations to a syntactic fixpoint.

    The run stops early once the initial all-at-duration state is attracted,
    since the iteration is accumulative and cannot un-attract it.
    """
    if mode not in ("exact", "over", "under"):
        raise ValueError(f"unknown mode {mode!r}")
    config = config or SolverConfig()
    space = TimerSpace(game.timers)
    plans = _location_plans(game)
    info = RunInfo(mode=mode, k=k)

    attr: dict[str, rg.SymbolicSet] = {
        loc: rg.full(space) if loc in game.unsafe else rg.EMPTY
        for loc in game.locations
    }
    init_point = tuple(t.duration for t in game.timers)
    if rg.member(space, attr[game.initial], init_point):
        info.hit_initial = True
        info.fixpoint = True
        return attr, info

    # Locations whose arms can reach a given location; recomputing a location
    # is only needed when one of its successors changed in the last round.
    preds: dict[str, set[str]] = {loc: set() for loc in game.locations}
    for loc, plan in plans.items():
        for row in plan.table:
            for arms in row:
                for arm in arms:
                    preds[arm.target].add(loc)

    changed = set(game.unsafe)
    trans_cache: dict = {}
    while changed:
        worklist = sorted({l for c in changed for l in preds[c]})
        if not worklist:
            break
        if config.deadline is not None and time.perf_counter() > config.deadline:
            raise SolveBudgetExceeded("solver deadline exceeded")
        new_attr = dict(attr)
        round_changed: set[str] = set()
        for loc in worklist:
            s = _cpre_location(space, plans[loc], attr, trans_cache)
            if mode == "over":
                s = rg.over(space, k, s)
            elif mode == "under":
                s = rg.under(space, k, s)
            merged = rg.union(space, attr[loc], s)
            if not rg.is_equal(merged, attr[loc]):
                new_attr[loc] = merged
                round_changed.add(loc)
                info.peak_regions = max(info.peak_regions, rg.region_count(merged))
        if not round_changed:
            break
        info.iterations += 1
        if info.iterations > config.max_iterations:
            raise SolveBudgetExceeded(f"iteration budget exceeded at k={k}")
        attr = new_attr
        changed = round_changed
        if rg.member(space, attr[game.initial], init_point):
            info.hit_initial = True
            if stop_on_hit:
                return attr, info
    info.fixpoint = True
    return attr, info


def solve(game: CountdownTimerGame, config: SolverConfig | None = None) -> Verdict:
    """Realizability by k-doubling under/over approximation runs.

    An environment win in the under-approximation or a system win in the
    over-approximation is final; otherwise the threshold doubles, and once
    k exceeds half the largest duration both runs are exact.  On games that
    approximate assumptions an environment win means no conclusion.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    stats = SolveStats(locations=len(game.locations), timers=len(game.timers))
    max_d = max((t.duration for t in game.timers), default=0)
    k = max(1, config.k0)

    def finish(status: str, note: str = "") -> Verdict:
        stats.k_final = k
        stats.seconds = time.perf_counter() - t0
        if status == "UNREALIZABLE" and game.approximate:
            return Verdict("UNKNOWN", stats,
                           note or "environment wins only the assumption-approximate game")
        return Verdict(status, stats, note)

    while True:
        exact = 2 * k > max_d
        try:
            if exact:
                _, info = attractor_symbolic(game, "exact", k, config)
                stats.runs.append(info)
                return finish("UNREALIZABLE" if info.hit_initial else "REALIZABLE")
            _, info = attractor_symbolic(game, "under", k, config)
            stats.runs.append(info)
            if info.hit_initial:
                return finish("UNREALIZABLE")
            _, info = attractor_symbolic(game, "over", k, config)
            stats.runs.append(info)
            if info.fixpoint and not info.hit_initial:
                return finish("REALIZABLE")
        except SolveBudgetExceeded as exc:
            out_of_time = (config.deadline is not None
                           and time.perf_counter() > config.deadline)
            if exact or out_of_time:
                stats.k_final = k
                stats.seconds = time.perf_counter() - t0
                return Verdict("UNKNOWN", stats, str(exc))
        k *= 2


def solve_explicit(game: CountdownTimerGame, budget: int = 10**7,
                   space: str = "reachable") -> Verdict:
    """Verdict via the explicit-state oracle (small games only)."""
    from .game import attractor_explicit

    t0 = time.perf_counter()
    stats = SolveStats(locations=len(game.locations), timers=len(game.timers))
    _, winner = attractor_explicit(game, budget, space)
    stats.seconds = time.perf_counter() - t0
    if winner == "ENV" and game.approximate:
        return Verdict("UNKNOWN", stats,
                       "environment wins only the assumption-approximate game")
    return Verdict("UNREALIZABLE" if winner == "ENV" else "REALIZABLE", stats)

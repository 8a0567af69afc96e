"""Benchmark family generators and a verdict/timing harness.

Each generator emits specification text in the surface grammar; bounds are
divided by the scale factor (rounded up, still at least one step) so the
same family shape can be exercised cheaply.  The harness produces one
record per instance and never lets a single run abort the suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .construction import BuildBudgetExceeded, BuildConfig, build_game
from .parser import Spec, parse_spec
from .solver import SolveBudgetExceeded, SolverConfig, solve

FAMILIES = (
    "Clean", "Clean_C", "Clean_H", "Clean_N", "Coffee", "Coffee_C",
    "conv-belt", "robo-cam", "rail2", "rail3",
    "phiA", "phiB", "phiC", "phiD",
)

_ARITY = {
    "Clean": 1, "Clean_C": 1, "Clean_H": 1, "Clean_N": 1,
    "Coffee": 1, "Coffee_C": 1,
    "conv-belt": 0, "robo-cam": 0,
    "rail2": 2, "rail3": 3,
    "phiA": 1, "phiB": 1, "phiC": 1, "phiD": 1,
}


@dataclass(frozen=True)
class BenchmarkId:
    family: str
    params: tuple[int, ...] = ()
    scale: float = 1

    def __post_init__(self):
        if self.family not in _ARITY:
            raise ValueError(f"unknown benchmark family {self.family!r}")
        if len(self.params) != _ARITY[self.family]:
            raise ValueError(
                f"{self.family} takes {_ARITY[self.family]} parameter(s), got {self.params}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def name(self) -> str:
        base = self.family
        if self.params:
            base += "(" + ",".join(map(str, self.params)) + ")"
        if self.scale != 1:
            base += f"/{self.scale:g}"
        return base


def _scaled(bid: BenchmarkId, bound: int) -> int:
    return max(1, math.ceil(bound / bid.scale))


OFFICES = ("office1", "office2", "office3", "office4")


def _mutex_lines(places: tuple[str, ...]) -> list[str]:
    out = []
    for p in places:
        others = " && ".join(f"!{q}" for q in places if q != p)
        out.append(f"G ({p} -> ({others}))")
    return out


def _clean_core(bid: BenchmarkId, n: int) -> list[str]:
    places = ("corridor",) + OFFICES
    parts = ["corridor", "G (" + " || ".join(places) + ")"]
    parts += _mutex_lines(places)
    d10 = _scaled(bid, 10)
    parts += [f"G (corridor -> X({o} -> G[<={d10}] {o}))" for o in OFFICES]
    d720 = _scaled(bid, 720)
    parts += [f"G F[<={d720}] {o}" for o in OFFICES[:n]]
    return parts


def _spec_text(inputs, outputs, assumptions, guarantee_parts) -> str:
    lines = [
        "INPUTS " + " ".join(inputs) + ";",
        "OUTPUTS " + " ".join(outputs) + ";",
    ]
    lines += [f"ASSUME {a};" for a in assumptions]
    body = "\n  && ".join(guarantee_parts)
    lines.append(f"GUARANTEE {body};")
    return "\n".join(lines) + "\n"


def generate_text(bid: BenchmarkId) -> str:
    """The benchmark instance as specification text."""
    fam = bid.family
    n = bid.params[0] if bid.params else 0
    if fam in ("Clean", "Clean_C", "Clean_H", "Clean_N", "Coffee", "Coffee_C") and not 1 <= n <= 4:
        raise ValueError(f"{fam} takes a parameter in 1..4")

    if fam == "Clean":
        return _spec_text((), ("corridor",) + OFFICES, (), _clean_core(bid, n))

    if fam == "Clean_C":
        parts = _clean_core(bid, n)
        d20, d360 = _scaled(bid, 20), _scaled(bid, 360)
        parts += [
            f"G (!charge -> X(charge -> G[<={d20}] charge))",
            "G (charge -> corridor)",
            f"G F[<={d360}] charge",
        ]
        return _spec_text((), ("corridor",) + OFFICES + ("charge",), (), parts)

    if fam == "Clean_H":
        parts = _clean_core(bid, n)
        parts += [f"G (human{i} -> !office{i})" for i in range(1, 5)]
        return _spec_text(tuple(f"human{i}" for i in range(1, 5)),
                          ("corridor",) + OFFICES, (), parts)

    if fam == "Clean_N":
        d720, d60 = _scaled(bid, 720), _scaled(bid, 60)
        assumptions = [
            f"G (!night -> F[<={d720}] night)",
            f"G (!night -> X(night -> G[<={d720}] night))",
        ]
        places = ("corridor",) + OFFICES
        parts = ["corridor", "G (" + " || ".join(places) + ")"]
        parts += _mutex_lines(places)
        d10 = _scaled(bid, 10)
        parts += [f"G (corridor -> X({o} -> G[<={d10}] {o}))" for o in OFFICES]
        parts += [f"G (!night -> !{o})" for o in OFFICES]
        parts += [f"G (!night -> X(night -> F[<={d60}] office{i}))" for i in range(1, n + 1)]
        return _spec_text(("night",), places, assumptions, parts)

    if fam in ("Coffee", "Coffee_C"):
        places = ("corridor",) + OFFICES
        parts = ["corridor", "G (" + " || ".join(places) + ")"]
        parts += _mutex_lines(places)
        d120, d180, d600 = _scaled(bid, 120), _scaled(bid, 180), _scaled(bid, 600)
        parts += [
            f"G (!corridor -> X(corridor -> G[<={d120}] corridor))",
            "G (makeCoffee -> office1)",
            f"G (!makeCoffee -> X(makeCoffee -> G[<={d180}] makeCoffee))",
        ]
        parts += [
            f"G (request{5 - i} -> (F[<={d600}] makeCoffee) && (F[<={d600}] office{5 - i}))"
            for i in range(1, n + 1)
        ]
        outputs = places + ("makeCoffee",)
        if fam == "Coffee_C":
            d1200, d21600 = _scaled(bid, 1200), _scaled(bid, 21600)
            parts += [
                f"G (!charge -> X(charge -> (G[<={d1200}] charge) && (F[<={d1200}] X !charge)))",
                f"G (charge -> X(!charge -> (G[<={d21600}] !charge) && (F[<={d21600}] X charge)))",
                "G (charge -> corridor)",
            ]
            outputs = outputs + ("charge",)
        return _spec_text(tuple(f"request{i}" for i in range(1, 5)), outputs, (), parts)

    if fam == "conv-belt":
        d2000, d3000 = _scaled(bid, 2000), _scaled(bid, 3000)
        assumptions = ["G ((stuck && X !stuck) <-> (X release))"]
        parts = [
            "G (move || stop)",
            "G (!(move && stop))",
            "G (stuck -> stop)",
            f"G (release -> G[<={d2000}] stop)",
            f"G ((resume && !stuck) -> F[<={d3000}] (move W stuck))",
        ]
        return _spec_text(("release", "stuck", "resume"), ("move", "stop"),
                          assumptions, parts)

    if fam == "robo-cam":
        d3000, d3001 = _scaled(bid, 3000), _scaled(bid, 3001)
        d4000, d1000 = _scaled(bid, 4000), _scaled(bid, 1000)
        assumptions = [
            "G (!(pick && put))",
            "G (!(pick && move))",
            "G (!(put && move))",
            f"G (pick -> X((G[<={d3000}] move) && F[<={d3001}] put))",
            f"G (put -> X((G[<={d3000}] move) && F[<={d3001}] pick))",
            "pick",
        ]
        parts = [
            "G (!(on <-> off))",
            f"G (on -> F[<={d4000}] !on)",
            f"G ((F[<={d1000}] pick) -> on)",
            f"G ((F[<={d1000}] put) -> on)",
        ]
        return _spec_text(("pick", "put", "move"), ("on", "off"), assumptions, parts)

    if fam in ("rail2", "rail3"):
        crossings = 2 if fam == "rail2" else 3
        ts = bid.params
        if any(t < 1 for t in ts):
            raise ValueError("rail crossing times must be >= 1")
        if fam == "rail2":
            in_bounds = [60 * ts[0], 60 * (ts[0] + ts[1])]
            travel_bound = 60 * (ts[0] + ts[1]) + (100 if ts == (2, 4) else 120)
        else:
            in_bounds = [60 * t for t in ts]
            travel_bound = 60 * ts[-1] + 120
        d60, d120 = _scaled(bid, 60), _scaled(bid, 120)
        idx = range(1, crossings + 1)
        train = [f"(G[<={_scaled(bid, b)}] !in{i})" for i, b in zip(idx, in_bounds)]
        train.append(f"(G[<={_scaled(bid, travel_bound)}] !travel)")
        train += [f"opened{i}" for i in idx]
        train.append("G (travel -> X travel)")
        train.append("G (travel -> !(" + " || ".join(f"in{i}" for i in idx) + "))")
        gates = []
        for i in idx:
            gates += [
                f"G (!(opened{i} && closed{i}))",
                f"G (!(transit{i} && closed{i}))",
                f"G (!(transit{i} && opened{i}))",
                f"G (!transit{i} -> X(transit{i} -> G[<={d60}] transit{i}))",
                f"G ((opened{i} && !close{i}) -> X opened{i})",
                f"G ((opened{i} && close{i}) -> X (transit{i} && F[<={d60}] X closed{i}))",
                f"G ((closed{i} && !open{i}) -> X closed{i})",
                f"G ((closed{i} && open{i}) -> X (transit{i} && F[<={d60}] X opened{i}))",
            ]
        assumptions = [" && ".join(train), " && ".join(gates)]
        parts = [f"G (in{i} -> closed{i})" for i in idx]
        parts += [f"G (travel -> F[<={d120}] opened{i})" for i in idx]
        inputs = tuple(f"in{i}" for i in idx) + ("travel",) + tuple(
            p for i in idx for p in (f"closed{i}", f"opened{i}", f"transit{i}")
        )
        outputs = tuple(p for i in idx for p in (f"open{i}", f"close{i}"))
        return _spec_text(inputs, outputs, assumptions, parts)

    if fam in ("phiA", "phiB", "phiC", "phiD"):
        if n < 1:
            raise ValueError(f"{fam} takes a parameter >= 1")
        tri = [i * (i + 1) // 2 for i in range(n + 1)]
        if fam == "phiA":
            parts = []
            for i in range(n):
                b = _scaled(bid, tri[i]) if tri[i] else 0
                parts.append(f"X[{b}](G c{i})")
            bn = _scaled(bid, tri[n])
            parts.append(f"X[{bn}](G (c{n} || u0))")
            return _spec_text(tuple(f"u{i}" for i in range(n + 1)),
                              tuple(f"c{i}" for i in range(n + 1)), (), parts)
        if fam == "phiB":
            parts = []
            for i in range(n + 1):
                b = _scaled(bid, tri[i]) if tri[i] else 0
                parts.append(f"X[{b}](G (c{i} || u{i}))")
            return _spec_text(tuple(f"u{i}" for i in range(n + 1)),
                              tuple(f"c{i}" for i in range(n + 1)), (), parts)
        if fam == "phiC":
            alts = " || ".join(
                "G (" + " && ".join(f"u{j}" for j in range(i + 1)) + ")"
                for i in range(n + 1)
            )
            parts = ["G c0", f"({alts})"]
            return _spec_text(tuple(f"u{i}" for i in range(n + 1)),
                              tuple(f"c{i}" for i in range(n + 1)), (), parts)
        parts = ["c0"]
        for i in range(n + 1):
            b = _scaled(bid, i) if i else 0
            parts.append(f"X[{b}](u{i} || u{i + 1})")
        return _spec_text(tuple(f"u{i}" for i in range(n + 2)),
                          tuple(f"c{i}" for i in range(n + 1)), (), parts)

    raise AssertionError(fam)


def generate(bid: BenchmarkId) -> Spec:
    """The benchmark instance as a parsed, validated specification."""
    return parse_spec(generate_text(bid))


@dataclass
class RunRecord:
    benchmark: BenchmarkId
    verdict: str  # REALIZABLE | UNREALIZABLE | UNKNOWN | TIMEOUT
    locations: int = 0
    timers: int = 0
    k: int = 0
    gen_ms: float = 0.0
    total_ms: float = 0.0

    @property
    def winner(self) -> str:
        return {"REALIZABLE": "S", "UNREALIZABLE": "E"}.get(self.verdict, self.verdict)


def run_one(bid: BenchmarkId, build_config: BuildConfig | None = None,
            solver_config: SolverConfig | None = None,
            timeout_ms: float | None = None) -> RunRecord:
    t0 = time.perf_counter()
    deadline = t0 + timeout_ms / 1000 if timeout_ms else None
    record = RunRecord(bid, "TIMEOUT")
    try:
        spec = generate(bid)
        built = build_game(spec, build_config, deadline=deadline)
        record.locations = built.stats.locations
        record.timers = built.stats.timers
        record.gen_ms = built.stats.gen_seconds * 1000
        cfg = solver_config or SolverConfig()
        cfg = SolverConfig(k0=cfg.k0, max_iterations=cfg.max_iterations, deadline=deadline)
        verdict = solve(built.game, cfg)
        record.verdict = verdict.status
        record.k = verdict.stats.k_final
    except (BuildBudgetExceeded, SolveBudgetExceeded):
        record.verdict = "TIMEOUT"
    record.total_ms = (time.perf_counter() - t0) * 1000
    return record


def run_suite(ids, build_config: BuildConfig | None = None,
              solver_config: SolverConfig | None = None,
              timeout_ms: float | None = None) -> list[RunRecord]:
    return [run_one(bid, build_config, solver_config, timeout_ms) for bid in ids]


def to_csv(records) -> str:
    lines = ["name,L,T,gen_ms,k,winner,total_ms"]
    for r in records:
        lines.append(
            f"{r.benchmark.name},{r.locations},{r.timers},"
            f"{r.gen_ms:.1f},{r.k},{r.winner},{r.total_ms:.1f}"
        )
    return "\n".join(lines) + "\n"

"""Symbolic sets of timer valuations: partial orders over timers plus hyper-boxes.

A symbolic set is a union of regions; each region pairs a partial-order
constraint over the timers with a set of boxes (one closed interval per
timer).  A valuation belongs to the region when it satisfies the order and
lies in some box.  All operations keep values canonical: orders are
transitively closed, box intervals are tightened against the order (exact,
difference-bound style), empty parts are dropped, same-order regions are
merged and adjacent boxes coalesced.  Equality is syntactic equality of the
canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

from .formula import TimerId

Interval = tuple[int, int]
Box = tuple[Interval, ...]
Rel = tuple[int, int, bool]  # (i, j, strict): v_i < v_j if strict else v_i <= v_j
Order = tuple[Rel, ...]
Region = tuple[Order, tuple[Box, ...]]
SymbolicSet = tuple[Region, ...]

EMPTY: SymbolicSet = ()

_INF = None


@dataclass(frozen=True)
class TimerSpace:
    """The timer universe a symbolic set ranges over, in canonical order."""

    timers: tuple[TimerId, ...]

    @cached_property
    def durations(self) -> tuple[int, ...]:
        return tuple(t.duration for t in self.timers)

    @cached_property
    def index(self) -> dict[TimerId, int]:
        return {t: i for i, t in enumerate(self.timers)}

    @property
    def size(self) -> int:
        return len(self.timers)

    def full_box(self) -> Box:
        return tuple((0, d) for d in self.durations)

    def point_count(self) -> int:
        n = 1
        for d in self.durations:
            n *= d + 1
        return n

    @staticmethod
    def for_timers(timers) -> "TimerSpace":
        return TimerSpace(tuple(sorted(timers, key=lambda t: t.key)))


_closure_cache: dict[tuple[int, frozenset], tuple[Order, tuple] | None] = {}


def _order_closure(n: int, rels) -> tuple[Order, tuple] | None:
    """Transitive closure of the relation set as a difference-bound matrix.

    Returns (canonical relations, dist) where dist[i][j] bounds v_i - v_j,
    or None when the constraints are unsatisfiable.
    """
    key = (n, frozenset(rels))
    hit = _closure_cache.get(key, 0)
    if hit != 0:
        return hit
    dist = [[_INF] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0
    for i, j, strict in rels:
        w = -1 if strict else 0
        if dist[i][j] is _INF or w < dist[i][j]:
            dist[i][j] = w
    for m in range(n):
        dm = dist[m]
        for i in range(n):
            dim = dist[i][m]
            if dim is _INF:
                continue
            di = dist[i]
            for j in range(n):
                dmj = dm[j]
                if dmj is _INF:
                    continue
                w = dim + dmj
                if di[j] is _INF or w < di[j]:
                    di[j] = w
    result: tuple[Order, tuple] | None
    if any(dist[i][i] < 0 for i in range(n)):
        result = None
    else:
        canon = tuple(
            sorted(
                (i, j, dist[i][j] <= -1)
                for i in range(n)
                for j in range(n)
                if i != j and dist[i][j] is not _INF and dist[i][j] <= 0
            )
        )
        result = (canon, tuple(tuple(row) for row in dist))
    _closure_cache[key] = result
    return result


def _tighten(box: Box, dist, durations) -> Box | None:
    """Exact interval bounds of the box under the closed order constraints."""
    n = len(box)
    lo = [max(0, b[0]) for b in box]
    hi = [min(d, b[1]) for b, d in zip(box, durations)]
    if dist is None:  # no order constraints
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return tuple(zip(lo, hi))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dji = dist[j][i]
            if dji is not _INF and lo[j] - dji > lo[i]:
                lo[i] = lo[j] - dji
            dij = dist[i][j]
            if dij is not _INF and hi[j] + dij < hi[i]:
                hi[i] = hi[j] + dij
    if any(a > b for a, b in zip(lo, hi)):
        return None
    return tuple(zip(lo, hi))


def _insert_box(items: list[Box], box: Box) -> None:
    """Insert into a pairwise-unmergeable box list, keeping it that way."""
    pending = [box]
    while pending:
        cur = pending.pop()
        if any(_contains(x, cur) for x in items):
            continue
        items[:] = [x for x in items if not _contains(cur, x)]
        for idx, x in enumerate(items):
            merged = _merge_pair(cur, x)
            if merged is not None:
                del items[idx]
                pending.append(merged)
                break
        else:
            items.append(cur)


def _coalesce(boxes) -> tuple[Box, ...]:
    """Drop contained boxes and merge pairs differing in one adjacent dimension."""
    items: list[Box] = []
    for b in sorted(boxes):
        _insert_box(items, b)
    return tuple(sorted(items))


def _contains(outer: Box, inner: Box) -> bool:
    return all(ol <= il and ih <= oh for (ol, oh), (il, ih) in zip(outer, inner))


def _merge_pair(a: Box, b: Box) -> Box | None:
    if _contains(a, b):
        return a
    if _contains(b, a):
        return b
    diff = -1
    for k, (ia, ib) in enumerate(zip(a, b)):
        if ia != ib:
            if diff >= 0:
                return None
            diff = k
    ia, ib = a[diff], b[diff]
    if ia[0] > ib[1] + 1 or ib[0] > ia[1] + 1:
        return None
    merged = (min(ia[0], ib[0]), max(ia[1], ib[1]))
    return a[:diff] + (merged,) + a[diff + 1:]


def make(space: TimerSpace, parts) -> SymbolicSet:
    """Canonical symbolic set from (relations, boxes) pairs."""
    grouped: dict[Order, set[Box]] = {}
    dists: dict[Order, tuple] = {}
    for rels, boxes in parts:
        if rels:
            closed = _order_closure(space.size, rels)
            if closed is None:
                continue
            canon, dist = closed
        else:
            canon, dist = (), None
        bucket = grouped.setdefault(canon, set())
        dists[canon] = dist
        for box in boxes:
            tight = _tighten(box, dist, space.durations)
            if tight is not None:
                bucket.add(tight)
    regions = []
    for canon in sorted(grouped):
        boxes = _coalesce(grouped[canon])
        if boxes:
            regions.append((canon, boxes))
    return tuple(regions)


def full(space: TimerSpace) -> SymbolicSet:
    return make(space, [((), [space.full_box()])])


def is_empty(s: SymbolicSet) -> bool:
    return not s


def is_equal(a: SymbolicSet, b: SymbolicSet) -> bool:
    """Syntactic equality of canonical forms."""
    return a == b


def union(space: TimerSpace, a: SymbolicSet, b: SymbolicSet) -> SymbolicSet:
    """Region-set union: same-order regions merge, adjacent boxes coalesce.

    Both operands are canonical, so boxes stay tight and only incremental
    coalescing is needed; when nothing of b adds anything, a is returned
    unchanged (which makes fixpoint detection cheap)."""
    if not a:
        return b
    if not b:
        return a
    bucket: dict[Order, tuple[Box, ...]] = dict(a)
    changed = False
    for rels, boxes in b:
        cur = bucket.get(rels)
        if cur is None:
            bucket[rels] = boxes
            changed = True
            continue
        items = list(cur)
        for box in boxes:
            _insert_box(items, box)
        merged = tuple(sorted(items))
        if merged != cur:
            bucket[rels] = merged
            changed = True
    if not changed:
        return a
    return tuple(sorted(bucket.items()))


def intersect(space: TimerSpace, a: SymbolicSet, b: SymbolicSet) -> SymbolicSet:
    if not a or not b:
        return EMPTY
    parts = []
    for rels_a, boxes_a in a:
        for rels_b, boxes_b in b:
            boxes = []
            for ba in boxes_a:
                for bb in boxes_b:
                    cut = tuple(
                        (max(la, lb), min(ha, hb)) for (la, ha), (lb, hb) in zip(ba, bb)
                    )
                    if all(lo <= hi for lo, hi in cut):
                        boxes.append(cut)
            if boxes:
                parts.append((rels_a + rels_b, boxes))
    return make(space, parts)


def inc(space: TimerSpace, s: SymbolicSet) -> SymbolicSet:
    """Backward increment: predecessors (+1 on every timer) that stay in range.

    Per interval [lo, hi] -> [lo+1, min(hi, d-1)+1]; a dimension already at
    its duration kills the box.  The uniform shift leaves orders unchanged;
    order-free regions skip renormalization (translation preserves the
    canonical form, only clipped boxes are re-inserted).
    """
    fast: list[Region] = []
    slow = []
    for rels, boxes in s:
        plain: list[Box] = []
        clipped: list[Box] = []
        for box in boxes:
            out = []
            was_clipped = False
            for (lo, hi), d in zip(box, space.durations):
                if lo >= d:
                    out = None
                    break
                nh = min(hi, d - 1) + 1
                if nh != hi + 1:
                    was_clipped = True
                out.append((lo + 1, nh))
            if out is None:
                continue
            (clipped if was_clipped else plain).append(tuple(out))
        if not plain and not clipped:
            continue
        if not rels:
            items = sorted(plain)
            for b in sorted(clipped):
                _insert_box(items, b)
            if items:
                fast.append(((), tuple(sorted(items))))
        else:
            slow.append((rels, plain + clipped))
    out_set: SymbolicSet = tuple(sorted(fast))
    if slow:
        out_set = union(space, out_set, make(space, slow))
    return out_set


def eff_to(space: TimerSpace, timeouts, s: SymbolicSet) -> SymbolicSet:
    """Constrain to the given timeout pattern: expired timers are at zero,
    running timers in [1, d], and every expired timer sits strictly below
    every running one.  An empty pattern on an order-free region is a plain
    clip and skips renormalization."""
    to_idx = {space.index[t] for t in timeouts}
    extra = tuple(
        sorted((i, j, True) for i in to_idx for j in range(space.size) if j not in to_idx)
    )
    fast: list[Region] = []
    slow = []
    for rels, boxes in s:
        plain: list[Box] = []
        clipped: list[Box] = []
        for box in boxes:
            out = []
            was_clipped = False
            for k, ((lo, hi), d) in enumerate(zip(box, space.durations)):
                if k in to_idx:
                    lo2, hi2 = max(lo, 0), min(hi, 0)
                else:
                    lo2, hi2 = max(lo, 1), min(hi, d)
                if lo2 > hi2:
                    out = None
                    break
                if (lo2, hi2) != (lo, hi):
                    was_clipped = True
                out.append((lo2, hi2))
            if out is None:
                continue
            (clipped if was_clipped else plain).append(tuple(out))
        if not plain and not clipped:
            continue
        if not rels and not extra:
            items = list(plain)
            for b in sorted(clipped):
                _insert_box(items, b)
            if items:
                fast.append(((), tuple(sorted(items))))
        else:
            slow.append((rels + extra, plain + clipped))
    out_set: SymbolicSet = tuple(sorted(fast))
    if slow:
        out_set = union(space, out_set, make(space, slow))
    return out_set


def remap(space: TimerSpace, effect, s: SymbolicSet) -> SymbolicSet:
    """Backward timer remapping: constraints travel from each timer to its source.

    Timers that feed nobody become unconstrained; order relations are renamed
    alongside and dropped when they touch a reset timer.  Inputs are canonical
    (intervals already tight against the order), so per-dimension projection
    is exact.
    """
    if all(img == t for t, img in effect.mapping):
        return s
    image = {space.index[t]: (space.index[img] if img is not None else None)
             for t, img in effect.mapping}
    parts = []
    for rels, boxes in s:
        renamed = tuple(
            (image[i], image[j], strict)
            for i, j, strict in rels
            if image.get(i) is not None and image.get(j) is not None
        )
        moved = []
        for box in boxes:
            out = [(0, d) for d in space.durations]
            ok = True
            for t_idx, src_idx in image.items():
                if src_idx is None:
                    continue
                lo, hi = box[t_idx]
                olo, ohi = out[src_idx]
                lo, hi = max(lo, olo), min(hi, ohi)
                if lo > hi:
                    ok = False
                    break
                out[src_idx] = (lo, hi)
            if ok:
                moved.append(tuple(out))
        if moved:
            parts.append((renamed, moved))
    return make(space, parts)


def eff_reset(space: TimerSpace, effect, s: SymbolicSet) -> SymbolicSet:
    """Keep only states where every reset timer shows its full duration.

    Interval bounds implied through the order are re-derived during
    normalization (transitive, difference-bound exact)."""
    reset_idx = [space.index[t] for t, img in effect.mapping if img is None]
    if not reset_idx:
        return s
    parts = []
    for rels, boxes in s:
        cut = []
        for box in boxes:
            out = list(box)
            ok = True
            for i in reset_idx:
                lo, hi = out[i]
                d = space.durations[i]
                if lo > d or hi < d:
                    ok = False
                    break
                out[i] = (d, d)
            if ok:
                cut.append(tuple(out))
        if cut:
            parts.append((rels, cut))
    return make(space, parts)


def _band(k: int, d: int) -> tuple[int, int]:
    return (k, d - k)


def _approx_applies(k: int, d: int, lo: int, hi: int) -> bool:
    blo, bhi = _band(k, d)
    if blo > bhi:
        return False
    overlaps = not (hi < blo or lo > bhi)
    covers = lo <= blo and bhi <= hi
    return overlaps and not covers


def over(space: TimerSpace, k: int, s: SymbolicSet) -> SymbolicSet:
    """Widen every interval meeting the mid band [k, d-k] to include all of it."""
    parts = []
    for rels, boxes in s:
        widened = []
        for box in boxes:
            out = []
            for (lo, hi), d in zip(box, space.durations):
                if _approx_applies(k, d, lo, hi):
                    blo, bhi = _band(k, d)
                    out.append((min(lo, blo), max(hi, bhi)))
                else:
                    out.append((lo, hi))
            widened.append(tuple(out))
        parts.append((rels, widened))
    return make(space, parts)


def under(space: TimerSpace, k: int, s: SymbolicSet) -> SymbolicSet:
    """Remove the mid band from every interval meeting it, splitting boxes."""
    parts = []
    for rels, boxes in s:
        shrunk = []
        for box in boxes:
            dim_pieces: list[list[Interval]] = []
            for (lo, hi), d in zip(box, space.durations):
                if _approx_applies(k, d, lo, hi):
                    blo, bhi = _band(k, d)
                    pieces = []
                    if lo < blo:
                        pieces.append((lo, blo - 1))
                    if hi > bhi:
                        pieces.append((bhi + 1, hi))
                    if not pieces:
                        break
                    dim_pieces.append(pieces)
                else:
                    dim_pieces.append([(lo, hi)])
            else:
                shrunk.extend(product(*dim_pieces))
                continue
        if shrunk:
            parts.append((rels, shrunk))
    return make(space, parts)


def member(space: TimerSpace, s: SymbolicSet, point: tuple[int, ...]) -> bool:
    for rels, boxes in s:
        if not all(
            (point[i] < point[j] if strict else point[i] <= point[j])
            for i, j, strict in rels
        ):
            continue
        if any(all(lo <= x <= hi for x, (lo, hi) in zip(point, box)) for box in boxes):
            return True
    return False


def denote(space: TimerSpace, s: SymbolicSet, budget: int = 10**6) -> set[tuple[int, ...]]:
    """Exact enumeration of the represented valuations (testing oracle)."""
    if space.point_count() > budget:
        raise RuntimeError("denotation budget exceeded")
    out = set()
    for point in product(*(range(d + 1) for d in space.durations)):
        if member(space, s, point):
            out.add(point)
    return out


def region_count(s: SymbolicSet) -> int:
    return len(s)


def box_count(s: SymbolicSet) -> int:
    return sum(len(boxes) for _, boxes in s)

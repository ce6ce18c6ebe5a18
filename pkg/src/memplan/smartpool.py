"""Static pool layout from lifetime conflicts.

Variables are vertices weighted by size; two variables conflict when their
live arcs intersect, so any point-in-time set of live variables is a
clique and the peak load lower-bounds every feasible pool size. Placement
sorts by descending size and drops each variable into a hole among its
already-placed neighbours (first or best fit), extending the pool only
when nothing fits. A small exhaustive search provides the exact optimum
for test oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import GraphTooLarge, MemplanError, MissingVariable
from .iteration import IterationProfile, Segment


@dataclass
class PoolVar:
    var: str
    size: int
    alloc_index: int
    segments: tuple[Segment, ...]
    persistent: bool


@dataclass
class ConflictGraph:
    period: int
    vars: list[PoolVar]
    adj: list[set[int]]
    peak_load_bytes: int


@dataclass
class PoolPlan:
    policy: str
    offsets: dict[str, int]
    sizes: dict[str, int]
    footprint_bytes: int
    peak_load_bytes: int

    @property
    def competitive_ratio(self) -> float:
        if self.peak_load_bytes <= 0:
            return 1.0
        return self.footprint_bytes / self.peak_load_bytes


def conflict_graph_from_arcs(period: int,
                             arcs: list[tuple[str, int, int, tuple[Segment, ...], bool]],
                             peak_load_bytes: int) -> ConflictGraph:
    """Build adjacency by sweeping arc endpoints; half-open arcs that only
    touch do not conflict. arcs entries: (var, size, alloc_index, segments,
    persistent)."""
    n = len(arcs)
    pool_vars = [PoolVar(*a) for a in arcs]
    adj: list[set[int]] = [set() for _ in range(n)]
    events: list[tuple[int, int, int]] = []  # (point, phase, var); frees first
    for i, pv in enumerate(pool_vars):
        for lo, hi in pv.segments:
            if hi <= lo:
                continue
            events.append((lo, 1, i))
            events.append((hi, 0, i))
    events.sort()
    active: set[int] = set()
    for _point, phase, i in events:
        if phase == 0:
            active.discard(i)
        else:
            for j in active:
                if j != i:
                    adj[i].add(j)
                    adj[j].add(i)
            active.add(i)
    return ConflictGraph(period=period, vars=pool_vars, adj=adj,
                         peak_load_bytes=peak_load_bytes)


def build_conflict_graph(profile: IterationProfile) -> ConflictGraph:
    arcs = []
    for v in profile.variables:
        alloc = v.alloc_index if v.alloc_index is not None else -1
        arcs.append((v.var, v.size, alloc, v.segments, v.persistent))
    return conflict_graph_from_arcs(profile.period, arcs,
                                    profile.load.peak_bytes)


def _placement_order(graph: ConflictGraph) -> list[int]:
    # descending size; ties by earlier alloc (persistent carry -1 first),
    # then var id
    return sorted(
        range(len(graph.vars)),
        key=lambda i: (-graph.vars[i].size, graph.vars[i].alloc_index,
                       graph.vars[i].var),
    )


def _pick_offset(occupied: list[tuple[int, int]], need: int, policy: str) -> int:
    """occupied: sorted (start, end) ranges of placed neighbours."""
    holes = []
    top = 0
    for s, e in occupied:
        if s > top:
            holes.append((top, s - top))
        if e > top:
            top = e
    if policy == "first_fit":
        for off, length in holes:
            if length >= need:
                return off
        return top
    best = None  # (length, offset)
    for off, length in holes:
        if length >= need and (best is None or (length, off) < best):
            best = (length, off)
    return best[1] if best is not None else top


def plan_pool(graph: ConflictGraph, policy: str = "best_fit") -> PoolPlan:
    """Place every variable at a deterministic byte offset; conflicting
    variables never overlap and the pool grows only on misfit."""
    if policy not in ("first_fit", "best_fit"):
        raise ValueError(f"unknown policy {policy!r}")
    n = len(graph.vars)
    off = [0] * n
    placed = [False] * n
    for i in _placement_order(graph):
        size_i = graph.vars[i].size
        occupied = sorted(
            (off[j], off[j] + graph.vars[j].size)
            for j in graph.adj[i]
            if placed[j]
        )
        off[i] = _pick_offset(occupied, size_i, policy)
        placed[i] = True
    offsets = {graph.vars[i].var: off[i] for i in range(n)}
    sizes = {pv.var: pv.size for pv in graph.vars}
    footprint = max((off[i] + graph.vars[i].size for i in range(n)), default=0)
    return PoolPlan(policy=policy, offsets=offsets, sizes=sizes,
                    footprint_bytes=footprint,
                    peak_load_bytes=graph.peak_load_bytes)


def check_plan(plan: PoolPlan, graph: ConflictGraph) -> None:
    """Raise if any two conflicting variables overlap in address space or
    the footprint misses a placement."""
    for i, pv in enumerate(graph.vars):
        oi = plan.offsets[pv.var]
        if oi < 0:
            raise MemplanError(f"{pv.var} at negative offset")
        if oi + pv.size > plan.footprint_bytes:
            raise MemplanError(f"{pv.var} exceeds footprint")
        for j in graph.adj[i]:
            if j <= i:
                continue
            qv = graph.vars[j]
            oj = plan.offsets[qv.var]
            if oi < oj + qv.size and oj < oi + pv.size:
                raise MemplanError(
                    f"conflicting vars {pv.var} and {qv.var} overlap"
                )


def brute_force_optimal_footprint(graph: ConflictGraph, max_vars: int = 10) -> int:
    """Exact minimum footprint by exhaustive search.

    Offsets are restricted to subset sums of the sizes. That is lossless:
    in any optimal layout, repeatedly push down every variable that is
    neither at offset 0 nor resting exactly on top of a conflicting
    variable; the result is an equally good layout where every offset is a
    chain of stacked sizes, hence a subset sum.
    """
    n = len(graph.vars)
    if n > max_vars:
        raise GraphTooLarge(f"{n} vars exceeds cap {max_vars}")
    if n == 0:
        return 0
    lower = graph.peak_load_bytes
    best = plan_pool(graph, "best_fit").footprint_bytes
    if best <= lower:
        return best

    order = _placement_order(graph)
    sizes = [graph.vars[i].size for i in order]
    pos = {v: k for k, v in enumerate(order)}
    nbrs = [
        [pos[j] for j in graph.adj[order[k]] if pos[j] < k]
        for k in range(n)
    ]
    sums = {0}
    for s in sizes:
        sums |= {x + s for x in sums}
    candidates = sorted(sums)
    offs = [0] * n

    def dfs(k: int, cur: int) -> bool:
        nonlocal best
        if k == n:
            best = cur
            return best <= lower
        size_k = sizes[k]
        for off in candidates:
            if off + size_k >= best:
                break
            ok = True
            for j in nbrs[k]:
                if off < offs[j] + sizes[j] and offs[j] < off + size_k:
                    ok = False
                    break
            if not ok:
                continue
            offs[k] = off
            if dfs(k + 1, max(cur, off + size_k)):
                return True
        return False

    dfs(0, 0)
    return best


class LookupTable:
    """Maps a window-relative malloc op index to its pool byte offset."""

    def __init__(self, entries: dict[int, tuple[str, int]]):
        self._entries = dict(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, op_index: int) -> bool:
        return op_index in self._entries

    def offset_for(self, op_index: int) -> int:
        return self._entries[op_index][1]

    def var_for(self, op_index: int) -> str:
        return self._entries[op_index][0]

    def items(self):
        return sorted(self._entries.items())


def make_lookup_table(plan: PoolPlan, profile: IterationProfile) -> LookupTable:
    entries = {}
    for v in profile.variables:
        if v.alloc_index is None:
            continue
        if v.var not in plan.offsets:
            raise MissingVariable(v.var)
        entries[v.alloc_index] = (v.var, plan.offsets[v.var])
    return LookupTable(entries)

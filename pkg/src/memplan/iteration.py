"""Iteration detection and per-iteration lifetime extraction.

Training traces repeat: after a distinct first iteration the event stream
is periodic in (kind, size) fingerprints, with fresh variable ids per
iteration. Detection finds the smallest period whose last two repetitions
match; the last full period becomes the analysis window. Lifetimes are
circular arcs over [0, period): a variable freed "after" the window end
shows up as a wrapping arc via its previous-iteration twin, and variables
that are never freed are persistent and conflict with everything.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvariantViolation, PeriodNotFound
from .trace import EventKind, Trace, TraceEvent

Segment = tuple[int, int]


@dataclass(frozen=True)
class Access:
    index: int
    t_us: float
    kind: EventKind
    next_iteration: bool = False


@dataclass
class VariableLifetime:
    var: str
    base_var: str
    size: int
    alloc_index: int | None
    free_index: int | None
    segments: tuple[Segment, ...]
    accesses: list[Access]
    persistent: bool
    wraps: bool

    def covers(self, index: int) -> bool:
        return any(lo <= index < hi for lo, hi in self.segments)


@dataclass
class LoadProfile:
    loads: list[int]
    peak_bytes: int
    peak_index: int

    @property
    def samples(self) -> list[tuple[int, int]]:
        return list(enumerate(self.loads))


@dataclass
class DetectedIteration:
    period: int
    window: tuple[int, int]


@dataclass
class IterationProfile:
    period: int
    window: tuple[int, int]
    variables: list[VariableLifetime]
    load: LoadProfile
    op_times_us: list[float]
    period_duration_us: float
    events: list[TraceEvent]
    op_instance: list[str] = field(default_factory=list)

    def op_end_us(self, r: int) -> float:
        if r + 1 < self.period:
            return self.op_times_us[r + 1]
        return self.period_duration_us

    def lifetime(self, var: str) -> VariableLifetime:
        for v in self.variables:
            if v.var == var:
                return v
        raise KeyError(var)

    @property
    def alloc_instance(self) -> dict[int, str]:
        return {
            v.alloc_index: v.var
            for v in self.variables
            if v.alloc_index is not None
        }


def detect_iteration(trace: Trace) -> DetectedIteration:
    """Find the smallest period p where the last 2p events match pairwise
    on (kind, size) fingerprints; the window is the last full period."""
    n = len(trace)
    intern: dict[tuple, int] = {}
    fps = []
    for ev in trace:
        code = intern.setdefault((ev.kind, ev.size), len(intern))
        fps.append(code)
    for p in range(1, n // 2 + 1):
        if fps[n - p:] == fps[n - 2 * p: n - p]:
            return DetectedIteration(period=p, window=(n - p, n))
    raise PeriodNotFound(f"no repeating iteration suffix in {n} events")


class _Instance:
    __slots__ = ("base", "size", "alloc", "free", "accesses", "segments",
                 "persistent", "wraps", "name")

    def __init__(self, base, size, alloc):
        self.base = base
        self.size = size
        self.alloc = alloc
        self.free = None
        self.accesses: list[Access] = []
        self.segments: tuple[Segment, ...] = ()
        self.persistent = False
        self.wraps = False
        self.name = base


def _live_at(events: list[TraceEvent], stop: int) -> dict[str, tuple[int, int]]:
    """Variables live just before absolute index `stop`: id -> (malloc index, size)."""
    live: dict[str, tuple[int, int]] = {}
    for ev in events[:stop]:
        if ev.kind == EventKind.MALLOC:
            live[ev.var] = (ev.index, ev.size)
        elif ev.kind == EventKind.FREE:
            live.pop(ev.var, None)
    return live


def build_profile(window_events: list[tuple[EventKind, str, int]],
                  op_times_us: list[float],
                  period_duration_us: float,
                  live_start: dict[str, tuple[int, int | None]],
                  window: tuple[int, int] = (0, 0),
                  raw_events: list[TraceEvent] | None = None) -> IterationProfile:
    """Assemble an IterationProfile from one window of (kind, var, size) ops.

    live_start maps ids live at the window start to (size, twin_rel), where
    twin_rel is the window-relative index of the same variable's malloc one
    period later (steady state), or None when there is no in-window twin.
    """
    p = len(window_events)
    open_insts: dict[str, _Instance] = {}
    insts: list[_Instance] = []
    start_insts: dict[str, _Instance] = {}
    pre_frees: list[tuple[str, int]] = []
    resolved: list = [None] * p

    for base, (size, _twin) in live_start.items():
        inst = _Instance(base, size, None)
        start_insts[base] = inst
        insts.append(inst)

    for r, (kind, base, size) in enumerate(window_events):
        if kind == EventKind.MALLOC:
            if base in open_insts:
                raise InvariantViolation(r, f"malloc of live id {base!r} in window")
            inst = _Instance(base, size, r)
            open_insts[base] = inst
            insts.append(inst)
            resolved[r] = inst
        elif kind == EventKind.FREE:
            if base in open_insts:
                inst = open_insts.pop(base)
                inst.free = r
                inst.segments = ((inst.alloc, r),)
                resolved[r] = inst
            elif base in start_insts and start_insts[base].free is None:
                start_insts[base].free = r
                pre_frees.append((base, r))
                resolved[r] = start_insts[base]
            else:
                raise InvariantViolation(r, f"free of dead id {base!r} in window")
        else:
            if base in open_insts:
                inst = open_insts[base]
            elif base in start_insts and start_insts[base].free is None:
                inst = start_insts[base]
            else:
                raise InvariantViolation(r, f"use of dead id {base!r} in window")
            inst.accesses.append(Access(r, op_times_us[r], kind))
            resolved[r] = inst

    # Pair each freed carry-in variable with its next-iteration twin: the
    # malloc at the same relative position, which by fingerprint periodicity
    # exists and matches in size. The twin inherits a wrapping lifetime and
    # the carry-in's early accesses (they recur one period later).
    open_by_alloc = {inst.alloc: inst for inst in open_insts.values()}
    for base, r_f in pre_frees:
        old = start_insts.pop(base)
        insts.remove(old)
        size, twin_rel = live_start[base]
        twin = open_by_alloc.get(twin_rel) if twin_rel is not None else None
        if twin is not None and twin.size == size and twin.free is None \
                and r_f <= twin.alloc:
            twin.free = r_f
            twin.wraps = True
            twin.segments = ((twin.alloc, p), (0, r_f))
            early = [Access(a.index, a.t_us, a.kind, next_iteration=True)
                     for a in old.accesses]
            twin.accesses = early + twin.accesses
            twin.accesses.sort(key=lambda a: (a.next_iteration, a.index))
            del open_insts[twin.base]
            for r in range(p):
                if resolved[r] is old:
                    resolved[r] = twin
        elif twin is not None and twin.size == size and twin.free is None:
            # lifetime of at least one full period: the carried instance
            # and its twin coexist on [twin.alloc, r_f), so they must keep
            # separate pool slots; the carry tail recurs every window
            old.segments = ((0, r_f),)
            insts.append(old)
            twin.wraps = True
            twin.segments = ((twin.alloc, p),)
            del open_insts[twin.base]
        else:
            # no identifiable twin: conservatively conflict with everything
            old.segments = ((0, p),)
            old.wraps = True
            insts.append(old)

    for inst in start_insts.values():
        inst.persistent = True
        inst.segments = ((0, p),)
    for inst in open_insts.values():
        # allocated in window, never released: treat as persistent
        inst.persistent = True
        inst.wraps = True
        inst.segments = ((0, p),)

    counts: dict[str, int] = {}
    for inst in insts:
        counts[inst.base] = counts.get(inst.base, 0) + 1
    for inst in insts:
        if counts[inst.base] > 1 and inst.alloc is not None:
            inst.name = f"{inst.base}#{inst.alloc}"

    variables = [
        VariableLifetime(
            var=inst.name,
            base_var=inst.base,
            size=inst.size,
            alloc_index=inst.alloc,
            free_index=inst.free,
            segments=inst.segments,
            accesses=inst.accesses,
            persistent=inst.persistent,
            wraps=inst.wraps,
        )
        for inst in insts
    ]
    variables_sorted = sorted(
        variables,
        key=lambda v: (-1 if v.alloc_index is None else v.alloc_index, v.var),
    )
    profile = IterationProfile(
        period=p,
        window=window,
        variables=variables_sorted,
        load=LoadProfile([], 0, 0),
        op_times_us=op_times_us,
        period_duration_us=period_duration_us,
        events=raw_events if raw_events is not None else [],
        op_instance=[inst.name for inst in resolved],
    )
    profile.load = compute_load_profile(profile)
    return profile


def extract_lifetimes(trace: Trace, window: tuple[int, int]) -> IterationProfile:
    """Extract per-variable circular lifetimes for one iteration window."""
    start, end = window
    n = len(trace)
    if not (0 <= start < end <= n):
        raise ValueError(f"window {window} out of range for {n} events")
    p = end - start
    events = trace.events[start:end]
    t0 = events[0].t_us
    op_times = [float(ev.t_us - t0) for ev in events]
    if start >= 1:
        duration = float(trace.events[end - 1].t_us - trace.events[start - 1].t_us)
    else:
        tail = op_times[-1] - op_times[-2] if p > 1 else 1.0
        duration = op_times[-1] + max(tail, 1.0)
    if duration <= op_times[-1]:
        duration = op_times[-1] + 1.0

    live = _live_at(trace.events, start)
    live_start = {}
    for base, (abs_idx, size) in live.items():
        twin_rel = abs_idx - (start - p) if abs_idx >= start - p else None
        live_start[base] = (size, twin_rel)

    window_ops = [(ev.kind, ev.var, ev.size) for ev in events]
    return build_profile(window_ops, op_times, duration, live_start,
                         window=window, raw_events=events)


def compute_load_profile(profile: IterationProfile) -> LoadProfile:
    """Step function of live bytes per op index; peak ties go to the
    earliest index."""
    p = profile.period
    diff = [0] * (p + 1)
    for v in profile.variables:
        for lo, hi in v.segments:
            diff[lo] += v.size
            diff[hi] -= v.size
    loads = []
    acc = 0
    for r in range(p):
        acc += diff[r]
        loads.append(acc)
    peak = max(loads) if loads else 0
    peak_index = loads.index(peak) if loads else 0
    return LoadProfile(loads=loads, peak_bytes=peak, peak_index=peak_index)


def profile_report(profile: IterationProfile) -> dict:
    """JSON-ready summary: period, variable table, per-op load samples."""
    variables = []
    for v in profile.variables:
        variables.append({
            "var": v.var,
            "base_var": v.base_var,
            "size": v.size,
            "alloc_index": v.alloc_index,
            "free_index": v.free_index,
            "segments": [list(s) for s in v.segments],
            "persistent": v.persistent,
            "wraps": v.wraps,
            "accesses": [
                {"index": a.index, "t_us": a.t_us, "kind": a.kind.value,
                 "next_iteration": a.next_iteration}
                for a in v.accesses
            ],
        })
    return {
        "period": profile.period,
        "window": list(profile.window),
        "period_duration_us": profile.period_duration_us,
        "peak_bytes": profile.load.peak_bytes,
        "peak_index": profile.load.peak_index,
        "variables": variables,
        "load": [
            {"t_us": profile.op_times_us[r], "bytes": profile.load.loads[r]}
            for r in range(profile.period)
        ],
    }

"""Swap transfer scheduling and discrete-event simulation.

Two views of the same plan:

* the analytic curve applies transfers at their scheduled times with ops
  at their natural times, so it can exceed the limit when transfers are
  too slow;
* the replay curve executes the window op by op against the limit: an
  allocation that does not fit blocks until a pending swap-out finishes,
  an access of an evicted variable blocks until its swap-in finishes,
  and every blocked microsecond is charged to overhead.

Swap-outs go over the channel in the order their triggering accesses
complete; swap-ins follow their planned order without overtaking. After a
replay the swap-in deadlines are recomputed from the actual access times
and the plan is rebuilt, until the total delay stops changing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .autoswap import SwapCandidate, apply_absence
from .errors import SwapDeadlock
from .iteration import IterationProfile, build_profile
from .trace import EventKind

INF = float("inf")

# times are microseconds; anything below a picosecond is float noise from
# schedule arithmetic, not a real stall
_EPS_US = 1e-6


@dataclass(frozen=True)
class SwapEvent:
    var: str
    size: int
    t_start_out: float
    t_end_out: float
    t_start_in: float
    t_end_in: float


@dataclass
class SwapSchedule:
    events: list[SwapEvent]
    candidates: dict[str, SwapCandidate]
    order: list[str]
    period_duration_us: float

    @property
    def by_var(self) -> dict[str, SwapEvent]:
        return {e.var: e for e in self.events}

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def _make_schedule(selection: list[SwapCandidate],
                   ready: dict[str, float],
                   deadline: dict[str, float],
                   duration_us: float) -> SwapSchedule:
    """Serialize transfers on one duplex channel.

    Outs start as soon as their access completes, in completion order.
    Ins aim to end exactly at their deadline, pulled earlier when a later
    transfer would otherwise start before this one ends, then pushed
    later if the variable's own out has not finished.
    """
    t_so: dict[str, float] = {}
    t_eo: dict[str, float] = {}
    busy = 0.0
    for c in sorted(selection, key=lambda c: (ready[c.var], c.var)):
        start = max(ready[c.var], busy)
        t_so[c.var] = start
        busy = start + c.delta_out_us
        t_eo[c.var] = busy

    ins = sorted(selection, key=lambda c: (deadline[c.var], c.var))
    desired = [0.0] * len(ins)
    cap = INF
    for i in reversed(range(len(ins))):
        end = min(deadline[ins[i].var], cap)
        desired[i] = end - ins[i].delta_in_us
        cap = desired[i]
    t_si: dict[str, float] = {}
    t_ei: dict[str, float] = {}
    prev_end = 0.0
    for i, c in enumerate(ins):
        start = max(desired[i], t_eo[c.var], prev_end)
        t_si[c.var] = start
        prev_end = start + c.delta_in_us
        t_ei[c.var] = prev_end

    events = sorted(
        (SwapEvent(c.var, c.size, t_so[c.var], t_eo[c.var],
                   t_si[c.var], t_ei[c.var]) for c in selection),
        key=lambda e: (e.t_start_out, e.var),
    )
    return SwapSchedule(
        events=events,
        candidates={c.var: c for c in selection},
        order=[c.var for c in selection],
        period_duration_us=duration_us,
    )


def build_schedule(selection: list[SwapCandidate],
                   profile: IterationProfile) -> SwapSchedule:
    ready = {c.var: c.out_ready_us for c in selection}
    deadline = {c.var: c.in_time_us for c in selection}
    return _make_schedule(selection, ready, deadline,
                          profile.period_duration_us)


@dataclass(frozen=True)
class DelayedOp:
    index: int
    delay_us: float


@dataclass
class LoadCurve:
    points: list[tuple[float, int]]
    peak_bytes: int
    peak_time_us: float


@dataclass
class SimulationResult:
    limit_bytes: int | None
    baseline_duration_us: float
    duration_us: float
    overhead_us: float
    overhead_pct: float
    achieved_peak_bytes: int
    delayed_ops: list[DelayedOp]
    load_prime: LoadCurve
    load_double_prime: LoadCurve
    schedule: SwapSchedule
    rounds: int = 1


def _op_deltas(profile: IterationProfile) -> tuple[int, list[int]]:
    """Per-op load deltas matching the profile's segment step function.

    Segments starting at slot 0 are carry-in and count toward the initial
    load instead of producing an op delta."""
    p = profile.period
    delta = [0] * p
    live0 = 0
    for v in profile.variables:
        for lo, hi in v.segments:
            if lo == 0:
                live0 += v.size
            else:
                delta[lo] += v.size
            if hi < p:
                delta[hi] -= v.size
    return live0, delta


def _accumulate(live0: int, events: list[tuple[float, int]]) -> LoadCurve:
    """Fold (time, delta) steps into a curve; same-time frees apply before
    mallocs so momentary overlap is not charged."""
    events = sorted(events, key=lambda e: (e[0], e[1]))
    points: list[tuple[float, int]] = [(0.0, live0)]
    load = live0
    peak, peak_t = live0, 0.0
    for t, d in events:
        load += d
        if points and points[-1][0] == t:
            points[-1] = (t, load)
        else:
            points.append((t, load))
        if load > peak:
            peak, peak_t = load, t
    return LoadCurve(points=points, peak_bytes=peak, peak_time_us=peak_t)


def _overlay_curve(profile: IterationProfile,
                   schedule: SwapSchedule) -> LoadCurve:
    """Planned steady-state curve: op deltas at natural times, swap deltas
    at scheduled times, next-iteration swap-ins mapped back one period."""
    live0, delta = _op_deltas(profile)
    d = profile.period_duration_us
    events: list[tuple[float, int]] = [
        (profile.op_times_us[r], delta[r])
        for r in range(profile.period) if delta[r] != 0
    ]
    for e in schedule.events:
        spans = schedule.candidates[e.var].spans_iterations
        events.append((e.t_end_out, -e.size))
        if spans:
            live0 -= e.size
            events.append((max(e.t_start_in - d, 0.0), e.size))
        else:
            events.append((e.t_start_in, e.size))
    return _accumulate(live0, events)


class _Replay:
    """One pass of the op stream against a limit and an in-flight plan."""

    def __init__(self, profile: IterationProfile, schedule: SwapSchedule,
                 limit_bytes: int | None, d_actual: float):
        self.profile = profile
        self.limit = limit_bytes
        self.live0, self.delta = _op_deltas(profile)
        self.sel = schedule.candidates
        self.sched = schedule
        self.size = {e.var: e.size for e in schedule.events}
        self.plan_in: dict[str, float] = {}
        deadline: dict[str, float] = {}
        for e in schedule.events:
            c = self.sel[e.var]
            if c.spans_iterations:
                self.live0 -= e.size
                self.plan_in[e.var] = max(e.t_start_in - d_actual, 0.0)
            else:
                self.plan_in[e.var] = e.t_start_in
            deadline[e.var] = e.t_end_in
        self.in_order = sorted(
            self.plan_in,
            key=lambda v: (self.plan_in[v], deadline[v], v),
        )
        self.out_trigger = {self.sel[v].out_index: v for v in self.sel}
        self.in_wait = {self.sel[v].in_index: v for v in self.sel}

        self.k_in = 0
        self.in_busy = 0.0
        self.in_done: dict[str, float] = {}
        self.head_floor = 0.0
        self.completions: list[tuple[float, str, int]] = []
        self.k_out = 0
        self.out_busy = 0.0
        self.load = self.live0
        self.peak = self.live0
        self.peak_t = 0.0
        self.points: list[tuple[float, int]] = [(0.0, self.live0)]
        self.delay = 0.0
        self.delayed: list[DelayedOp] = []
        self.actual_start: list[float] = [0.0] * profile.period

    def _point(self, t: float) -> None:
        if self.points[-1][0] == t:
            self.points[-1] = (t, self.load)
        else:
            self.points.append((t, self.load))
        if self.load > self.peak:
            self.peak, self.peak_t = self.load, t

    def _head(self) -> tuple[str, float] | None:
        if self.k_in >= len(self.in_order):
            return None
        v = self.in_order[self.k_in]
        start = max(self.plan_in[v], self.in_busy, self.head_floor)
        if self.limit is not None and self.load + self.size[v] > self.limit:
            return (v, INF)  # space-blocked until something frees
        return (v, start)

    def _step(self, horizon: float) -> bool:
        t_out = self.completions[self.k_out][0] \
            if self.k_out < len(self.completions) else INF
        h = self._head()
        t_in = h[1] if h else INF
        t = min(t_out, t_in)
        if t > horizon:
            return False
        if t_out <= t_in:
            _, _, sz = self.completions[self.k_out]
            self.k_out += 1
            self.load -= sz
            self.head_floor = max(self.head_floor, t_out)
            self._point(t_out)
        else:
            v = h[0]
            self.load += self.size[v]
            self._point(t_in)
            end = t_in + self.sel[v].delta_in_us
            self.in_busy = end
            self.in_done[v] = end
            self.k_in += 1
        return True

    def _process(self, horizon: float) -> None:
        while self._step(horizon):
            pass

    def run(self) -> None:
        pf = self.profile
        p = pf.period
        tau = pf.op_times_us
        for r in range(p):
            t0 = tau[r] + self.delay
            t = t0
            self._process(t)

            waiting = self.in_wait.get(r)
            if waiting is not None:
                while waiting not in self.in_done:
                    if not self._step(INF):
                        raise SwapDeadlock(
                            pf.window[0] + r,
                            f"swap-in of {waiting!r} cannot start",
                        )
                if self.in_done[waiting] > t + _EPS_US:
                    t = self.in_done[waiting]
                    self._process(t)

            d = self.delta[r]
            if d > 0 and self.limit is not None:
                # blocked allocation claims freed space before queued ins
                while self.load + d > self.limit:
                    if self.k_out >= len(self.completions):
                        raise SwapDeadlock(pf.window[0] + r)
                    t_free, _, sz = self.completions[self.k_out]
                    self.k_out += 1
                    self.load -= sz
                    self.head_floor = max(self.head_floor, t_free)
                    self._point(t_free)
                    t = max(t, t_free)

            if t > t0 + _EPS_US:
                self.delayed.append(DelayedOp(pf.window[0] + r, t - t0))
                self.delay += t - t0
            else:
                t = t0
            self.actual_start[r] = t

            if d != 0:
                self.load += d
                self._point(t)
                if d < 0:
                    self.head_floor = max(self.head_floor, t)
                    self._process(t)

            trig = self.out_trigger.get(r)
            if trig is not None:
                ready = t + (pf.op_end_us(r) - tau[r])
                start = max(ready, self.out_busy)
                self.out_busy = start + self.sel[trig].delta_out_us
                self.completions.append((self.out_busy, trig, self.size[trig]))


def simulate(schedule: SwapSchedule, profile: IterationProfile,
             limit_bytes: int | None, max_rounds: int = 100) -> SimulationResult:
    """Replay the window under the plan, refining swap-in deadlines from
    actual access times until the total delay is stable."""
    d_nat = profile.period_duration_us
    load_prime = _overlay_curve(profile, schedule)
    selection = [schedule.candidates[v] for v in schedule.order]
    sched = schedule
    prev_delay = None
    rounds = 0
    rep = None
    for _ in range(max_rounds):
        rep = _Replay(profile, sched, limit_bytes,
                      d_nat + (prev_delay or 0.0))
        rep.run()
        rounds += 1
        if not selection or rep.delay == 0.0:
            break
        if prev_delay is not None and abs(rep.delay - prev_delay) < 1e-6:
            break
        prev_delay = rep.delay
        d_act = d_nat + rep.delay
        ready = {}
        deadline = {}
        for c in selection:
            dur = profile.op_end_us(c.out_index) - profile.op_times_us[c.out_index]
            ready[c.var] = rep.actual_start[c.out_index] + dur
            deadline[c.var] = rep.actual_start[c.in_index] + (
                d_act if c.spans_iterations else 0.0
            )
        sched = _make_schedule(selection, ready, deadline, d_nat)

    curve = LoadCurve(points=rep.points, peak_bytes=rep.peak,
                      peak_time_us=rep.peak_t)
    return SimulationResult(
        limit_bytes=limit_bytes,
        baseline_duration_us=d_nat,
        duration_us=d_nat + rep.delay,
        overhead_us=rep.delay,
        overhead_pct=rep.delay / d_nat * 100.0 if d_nat > 0 else 0.0,
        achieved_peak_bytes=rep.peak,
        delayed_ops=rep.delayed,
        load_prime=load_prime,
        load_double_prime=curve,
        schedule=sched,
        rounds=rounds,
    )


def compute_load_min(profile: IterationProfile,
                     candidates: list[SwapCandidate]) -> int:
    """Residual peak with every candidate absent across its gap: the
    floor any selection policy can reach."""
    cur = [float(x) for x in profile.load.loads]
    for c in candidates:
        apply_absence(cur, c, profile.period)
    return int(max(cur)) if cur else 0


def combine_with_pool(profile: IterationProfile,
                      schedule: SwapSchedule) -> IterationProfile:
    """Rewrite the window so each swapped variable's absence splits its
    lifetime, then rebuild the profile for pool planning on what remains
    resident. Splits that do not fit inside one period are dropped, which
    only overstates the footprint."""
    if not schedule.events:
        return profile
    if not profile.events:
        raise ValueError("profile has no raw events to rewrite")
    p = profile.period
    tau = profile.op_times_us
    d = profile.period_duration_us
    sizes = {v.var: v.size for v in profile.variables}
    var_by = {v.var: v for v in profile.variables}

    # entry: (time, rank, seq, kind, id, size); rank orders same-time
    # entries as synthetic malloc < original op < synthetic free
    ops: list[tuple[float, int, int, EventKind, str, int]] = []
    for r in range(p):
        name = profile.op_instance[r]
        kind = profile.events[r].kind
        size = sizes[name] if kind == EventKind.MALLOC else 0
        ops.append((tau[r], 1, r, kind, name, size))

    seq = p
    span_split: set[str] = set()
    plain_split_seq: dict[str, int] = {}
    for e in schedule.events:
        c = schedule.candidates[e.var]
        v = var_by[e.var]
        s = sizes[e.var]
        # scheduled times live on the delayed clock while the op list
        # keeps baseline times, so the re-entry is pinned at or before
        # its own access; moving it earlier only lengthens the lifetime
        if not c.spans_iterations:
            bound = tau[v.free_index] if v.free_index is not None else d
            w_in = min(e.t_start_in, tau[c.in_index])
            if not e.t_end_out < w_in <= bound:
                continue
            ops.append((e.t_end_out, 2, seq, EventKind.FREE, e.var, 0))
            seq += 1
            ops.append((w_in, 0, seq, EventKind.MALLOC, e.var, s))
            plain_split_seq[e.var] = seq
            seq += 1
        else:
            w = min(max(e.t_start_in - d, 0.0), tau[c.in_index])
            if e.t_end_out > d or w >= e.t_end_out:
                continue
            if not v.persistent and (
                v.free_index is None or w > tau[v.free_index]
            ):
                continue
            span_split.add(e.var)
            ops.append((w, 0, seq, EventKind.MALLOC, e.var, s))
            seq += 1
            ops.append((e.t_end_out, 2, seq, EventKind.FREE, e.var, 0))
            seq += 1

    ops.sort(key=lambda o: (o[0], o[1], o[2]))
    pos_by_seq = {o[2]: i for i, o in enumerate(ops)
                  if o[3] == EventKind.MALLOC}

    live_start: dict[str, tuple[int, int | None]] = {}
    for v in profile.variables:
        if v.var in span_split:
            continue
        if v.alloc_index is None:
            if v.persistent and v.var in plain_split_seq:
                # carry-in pairs with its own mid-window re-entry
                twin = pos_by_seq.get(plain_split_seq[v.var])
            elif v.wraps:
                twin = None
            elif v.persistent:
                twin = None
            else:
                continue
            live_start[v.var] = (v.size, twin)
        elif v.wraps and not v.persistent:
            live_start[v.var] = (v.size, pos_by_seq.get(v.alloc_index))

    window_ops = [(o[3], o[4], o[5]) for o in ops]
    new_times = [o[0] for o in ops]
    return build_profile(window_ops, new_times, d, live_start,
                         window=profile.window)


def simulation_report(result: SimulationResult) -> dict:
    """JSON-ready summary of a simulation pass."""
    return {
        "limit": result.limit_bytes,
        "baseline_duration_us": result.baseline_duration_us,
        "duration_us": result.duration_us,
        "overhead_us": result.overhead_us,
        "overhead_pct": result.overhead_pct,
        "achieved_peak": result.achieved_peak_bytes,
        "rounds": result.rounds,
        "delayed_ops": [
            {"index": o.index, "delay_us": o.delay_us}
            for o in result.delayed_ops
        ],
        "schedule": [
            {"var": e.var, "t_so": e.t_start_out, "t_eo": e.t_end_out,
             "t_si": e.t_start_in, "t_ei": e.t_end_in}
            for e in result.schedule.events
        ],
    }

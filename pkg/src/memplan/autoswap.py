"""Swap candidate selection: which variables leave the device, in what order.

A variable qualifies when it is big enough and has two consecutive
accesses whose gap covers the peak op (circularly, so weights accessed
late in one iteration and early in the next count). Candidates are ranked
by one of four priority scores or by a weighted combination of all four;
the combination weights can be tuned by Bayesian optimization against
simulated overhead.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import bo
from .errors import LimitUnreachable
from .iteration import IterationProfile, VariableLifetime

MIB = 1 << 20

SCORE_NAMES = ("aoa", "doa", "wdoa", "swdoa")


@dataclass(frozen=True)
class TransferModel:
    bandwidth_bytes_per_s: float = 12e9
    latency_us: float = 10.0

    def delta_us(self, size_bytes: int) -> float:
        return size_bytes / self.bandwidth_bytes_per_s * 1e6 + self.latency_us


@dataclass
class SwapCandidate:
    var: str
    size: int
    out_index: int
    out_time_us: float
    out_ready_us: float
    in_index: int
    in_time_us: float
    delta_out_us: float
    delta_in_us: float
    spans_iterations: bool
    scores: dict[str, float] = field(default_factory=dict)

    @property
    def gap_us(self) -> float:
        return self.in_time_us - self.out_time_us


def _access_pairs(v: VariableLifetime, period: int) -> list[tuple[int, int]]:
    """Consecutive access pairs in linear coordinates over [0, 2*period).

    Coordinates of next-iteration accesses are shifted by one period;
    persistent variables additionally get the wrap-around pair from their
    last access back to their first."""
    coords = sorted(
        a.index + (period if a.next_iteration else 0) for a in v.accesses
    )
    pairs = [(coords[i], coords[i + 1]) for i in range(len(coords) - 1)
             if coords[i] < coords[i + 1]]
    if v.persistent and coords:
        pairs.append((coords[-1], coords[0] + period))
    return pairs


def _peak_pair(v: VariableLifetime, period: int,
               peak_index: int) -> tuple[int, int] | None:
    for c1, c2 in _access_pairs(v, period):
        if c1 >= period:
            c1 -= period
            c2 -= period
        if c1 < peak_index < c2 or c1 < peak_index + period < c2:
            return c1, c2
    return None


def filter_candidates(profile: IterationProfile,
                      threshold_bytes: int = MIB,
                      transfer: TransferModel | None = None) -> list[SwapCandidate]:
    """Variables with size >= threshold whose between-access gap covers the
    peak op index."""
    transfer = transfer or TransferModel()
    period = profile.period
    peak_index = profile.load.peak_index
    out = []
    for v in profile.variables:
        if v.size < threshold_bytes:
            continue
        pair = _peak_pair(v, period, peak_index)
        if pair is None:
            continue
        c1, c2 = pair
        spans = c2 >= period
        t1 = profile.op_times_us[c1]
        t2 = profile.op_times_us[c2 % period] + (
            profile.period_duration_us if spans else 0.0
        )
        delta = transfer.delta_us(v.size)
        out.append(
            SwapCandidate(
                var=v.var,
                size=v.size,
                out_index=c1,
                out_time_us=t1,
                out_ready_us=profile.op_end_us(c1),
                in_index=c2 % period,
                in_time_us=t2,
                delta_out_us=delta,
                delta_in_us=delta,
                spans_iterations=spans,
            )
        )
    return out


def absence_slots(c: SwapCandidate, period: int) -> Iterable[int]:
    """Op slots where the variable is away: strictly between its two
    accesses (it is resident while being accessed)."""
    c2 = c.in_index + (period if c.spans_iterations else 0)
    for x in range(c.out_index + 1, c2):
        yield x % period


def apply_absence(loads: list[float], c: SwapCandidate, period: int) -> None:
    for r in absence_slots(c, period):
        loads[r] -= c.size


def score_doa(c: SwapCandidate) -> float:
    """Gap between the two accesses minus the round-trip transfer time;
    negative means the swap cannot be hidden."""
    return c.gap_us - (c.delta_out_us + c.delta_in_us)


def score_aoa(c: SwapCandidate) -> float:
    """Size-weighted DOA; for negative DOA the size divides instead, so
    big variables are penalized least aggressively."""
    d = score_doa(c)
    return c.size * d if d >= 0 else d / c.size


def _step_area(loads: Sequence[float], op_times: Sequence[float],
               duration: float, a: float, b: float) -> float:
    # integral of the load step curve over [a, b], 0 <= a <= b <= duration
    if b <= a:
        return 0.0
    p = len(loads)
    lo = max(bisect.bisect_right(op_times, a) - 1, 0)
    total = 0.0
    for r in range(lo, p):
        s = op_times[r]
        e = op_times[r + 1] if r + 1 < p else duration
        if s >= b:
            break
        ov = min(b, e) - max(a, s)
        if ov > 0:
            total += loads[r] * ov
    return total


def gap_area(profile: IterationProfile, c: SwapCandidate,
             loads: Sequence[float] | None = None) -> float:
    """Area under the load curve across the candidate's access gap,
    wall-time weighted and wrapping past the iteration end if needed."""
    loads = profile.load.loads if loads is None else loads
    d = profile.period_duration_us
    a, b = c.out_time_us, c.in_time_us
    if b <= d:
        return _step_area(loads, profile.op_times_us, d, a, b)
    return (_step_area(loads, profile.op_times_us, d, a, d)
            + _step_area(loads, profile.op_times_us, d, 0.0, b - d))


def score_wdoa(c: SwapCandidate, profile: IterationProfile) -> float:
    return gap_area(profile, c)


def _swdoa_greedy(candidates: Sequence[SwapCandidate],
                  profile: IterationProfile,
                  limit_bytes: int | None) -> tuple[list[SwapCandidate],
                                                    dict[str, float],
                                                    list[float]]:
    """Greedy largest-current-area picks; each pick's area is recomputed
    against the load left by the previous picks."""
    cur = [float(x) for x in profile.load.loads]
    remaining = list(candidates)
    order: list[SwapCandidate] = []
    scores: dict[str, float] = {}
    while remaining:
        if limit_bytes is not None and max(cur) <= limit_bytes:
            break
        best = None
        best_key = None
        for c in remaining:
            key = (gap_area(profile, c, cur), c.size)
            if best is None or key > best_key or (
                key == best_key and c.var < best.var
            ):
                best, best_key = c, key
        scores[best.var] = best_key[0]
        apply_absence(cur, best, profile.period)
        order.append(best)
        remaining.remove(best)
    return order, scores, cur


def swdoa_scores(candidates: Sequence[SwapCandidate],
                 profile: IterationProfile) -> dict[str, float]:
    """Rank every candidate by exhaustive greedy; the recorded values are
    non-increasing in pick order."""
    _, scores, _ = _swdoa_greedy(candidates, profile, None)
    return scores


def select_by_swdoa(candidates: Sequence[SwapCandidate],
                    profile: IterationProfile,
                    limit_bytes: int) -> list[SwapCandidate]:
    order, _, cur = _swdoa_greedy(candidates, profile, limit_bytes)
    peak = max(cur) if cur else 0
    if peak > limit_bytes:
        raise LimitUnreachable(limit_bytes, int(peak))
    return order


def standardize(values: Sequence[float]) -> list[float]:
    """Population z-scores; a zero-variance vector standardizes to zeros."""
    n = len(values)
    if n == 0:
        return []
    mean = sum(values) / n
    var = sum((x - mean) ** 2 for x in values) / n
    if var <= 0:
        return [0.0] * n
    std = var ** 0.5
    return [(x - mean) / std for x in values]


@dataclass(frozen=True)
class ScoreWeights:
    aoa: float = 0.0
    doa: float = 0.0
    wdoa: float = 0.0
    swdoa: float = 1.0

    def __post_init__(self):
        for name in SCORE_NAMES:
            w = getattr(self, name)
            if not -1.0 <= w <= 1.0:
                raise ValueError(f"weight {name}={w} outside [-1, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.aoa, self.doa, self.wdoa, self.swdoa)


def attach_scores(candidates: Sequence[SwapCandidate],
                  profile: IterationProfile) -> None:
    """Fill every candidate's scores dict with all four raw scores."""
    sw = swdoa_scores(candidates, profile)
    for c in candidates:
        c.scores["doa"] = score_doa(c)
        c.scores["aoa"] = score_aoa(c)
        c.scores["wdoa"] = score_wdoa(c, profile)
        c.scores["swdoa"] = sw[c.var]


def combined_scores(candidates: Sequence[SwapCandidate],
                    profile: IterationProfile,
                    weights: ScoreWeights) -> dict[str, float]:
    """Weighted sum of the four scores, each standardized over the
    candidate set first."""
    if not all(name in c.scores for c in candidates for name in SCORE_NAMES):
        attach_scores(candidates, profile)
    combined: dict[str, float] = {c.var: 0.0 for c in candidates}
    for name in SCORE_NAMES:
        w = getattr(weights, name)
        zs = standardize([c.scores[name] for c in candidates])
        for c, z in zip(candidates, zs):
            combined[c.var] += w * z
    return combined


def select_by_score(candidates: Sequence[SwapCandidate],
                    profile: IterationProfile,
                    limit_bytes: int,
                    score: str = "swdoa",
                    weights: ScoreWeights | None = None) -> list[SwapCandidate]:
    """Insert candidates in rank order, updating the load, until the
    planned peak is within the limit."""
    candidates = list(candidates)
    if candidates:
        attach_scores(candidates, profile)
    if score == "swdoa":
        # greedy order; identical to sorting its recorded scores
        return select_by_swdoa(candidates, profile, limit_bytes)
    if score in ("doa", "aoa", "wdoa"):
        ranked = {c.var: c.scores[score] for c in candidates}
    elif score == "combined":
        ranked = combined_scores(candidates, profile,
                                 weights or ScoreWeights())
    else:
        raise ValueError(f"unknown score {score!r}")
    ordering = sorted(candidates,
                      key=lambda c: (-ranked[c.var], -c.size, c.var))
    cur = [float(x) for x in profile.load.loads]
    selected: list[SwapCandidate] = []
    for c in ordering:
        if max(cur) <= limit_bytes:
            break
        apply_absence(cur, c, profile.period)
        selected.append(c)
    peak = max(cur) if cur else 0
    if peak > limit_bytes:
        raise LimitUnreachable(limit_bytes, int(peak))
    return selected


def planned_peak(candidates: Sequence[SwapCandidate],
                 profile: IterationProfile) -> int:
    """Peak of the load with every given candidate absent across its gap."""
    cur = [float(x) for x in profile.load.loads]
    for c in candidates:
        apply_absence(cur, c, profile.period)
    return int(max(cur)) if cur else 0


def optimize_weights(evaluator: Callable[[ScoreWeights], float],
                     budget: int = 40,
                     seed: int = 0,
                     n_init: int = 5) -> tuple[ScoreWeights, float]:
    """Minimize simulated overhead over combination weights in [-1, 1]^4.

    The initial design is the four corner vectors (each reproducing one
    pure score's ranking) padded with random points, so the result is
    never worse than the best pure score, then GP expected improvement
    spends the rest of the budget.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cache: dict[tuple, float] = {}

    def f(x) -> float:
        key = tuple(round(float(v), 9) for v in x)
        if key not in cache:
            cache[key] = float(evaluator(ScoreWeights(*key)))
        return cache[key]

    corners = [
        (1.0, 0.0, 0.0, 0.0),
        (0.0, 1.0, 0.0, 0.0),
        (0.0, 0.0, 1.0, 0.0),
        (0.0, 0.0, 0.0, 1.0),
    ]
    best_x, best_y = bo.minimize(
        f,
        lower=[-1.0] * 4,
        upper=[1.0] * 4,
        budget=budget,
        seed=seed,
        init_points=corners,
        min_init=n_init,
    )
    return ScoreWeights(*(round(float(v), 9) for v in best_x)), best_y


def selection_report(selection: Sequence[SwapCandidate],
                     limit_bytes: int,
                     achieved_peak_bytes: int) -> dict:
    """JSON-ready record of what was picked, in pick order."""
    return {
        "limit": limit_bytes,
        "selected": [
            {"var": c.var, "size": c.size,
             "scores": dict(c.scores), "order": i}
            for i, c in enumerate(selection)
        ],
        "achieved_peak": achieved_peak_bytes,
    }

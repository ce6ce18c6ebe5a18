"""Synthetic layered-workload trace generator.

Emits traces shaped like DNN training: per-layer persistent weights
allocated up front, activations that accumulate during the forward half
and are released during the backward half, optional short-lived per-layer
temporaries, and an optionally perturbed first iteration (extra workspace
allocations, the way library autotuning behaves). Middle iterations are
structurally identical, so the load profile rises then falls the same way
every iteration.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import InvalidSpec
from .trace import EventKind, Trace, TraceEvent


@dataclass
class WorkloadSpec:
    activation_bytes: list[int]
    weight_bytes: list[int] | None = None
    iterations: int = 5
    seed: int = 0
    fixed_op_us: int = 5
    bytes_per_us: float = 5000.0
    jitter: float = 0.1
    temp_ratio: float = 0.0
    perturb_first: bool = True
    name: str = "layered"

    def resolved_weights(self) -> list[int]:
        if self.weight_bytes is not None:
            return list(self.weight_bytes)
        return [max(a // 4, 1) for a in self.activation_bytes]


def vgg_like(depth: int = 8, scale: float = 1.0, iterations: int = 5,
             seed: int = 0, temp_ratio: float = 0.5) -> WorkloadSpec:
    """Convenience spec: wide early activations shrinking with depth,
    weights growing with depth (conv towers into dense layers)."""
    mib = 1 << 20
    acts = []
    weights = []
    for i in range(depth):
        # distinct sizes per layer keep the iteration fingerprint primitive
        acts.append(int(scale * 64 * mib * (0.62 ** i)) + 4096 * (i + 1))
        weights.append(int(scale * mib * (1.45 ** i)) + 1024 * (i + 1))
    return WorkloadSpec(
        activation_bytes=acts,
        weight_bytes=weights,
        iterations=iterations,
        seed=seed,
        temp_ratio=temp_ratio,
        name=f"vgg_like_d{depth}",
    )


class _Emitter:
    def __init__(self, spec: WorkloadSpec, rng: random.Random):
        self.spec = spec
        self.rng = rng
        self.events: list[TraceEvent] = []
        self.t = 0

    def _duration(self, kind: EventKind, size: int) -> int:
        d = float(self.spec.fixed_op_us)
        if kind in (EventKind.READ, EventKind.WRITE):
            d += size / self.spec.bytes_per_us
        if self.spec.jitter > 0:
            d *= self.rng.uniform(1 - self.spec.jitter, 1 + self.spec.jitter)
        return max(1, round(d))

    def emit(self, kind: EventKind, var: str, size: int = 0) -> None:
        ev_size = size if kind == EventKind.MALLOC else 0
        self.events.append(
            TraceEvent(index=len(self.events), t_us=self.t, kind=kind,
                       var=var, size=ev_size)
        )
        self.t += self._duration(kind, size)


def generate_synthetic_trace(spec: WorkloadSpec) -> Trace:
    """Generate a deterministic trace for the given workload spec.

    Trace meta carries ground truth: the middle-iteration period in ops,
    iteration count and seed. Two calls with the same spec produce
    identical traces.
    """
    acts = list(spec.activation_bytes)
    if not acts:
        raise InvalidSpec("at least one layer required")
    if any(a <= 0 for a in acts):
        raise InvalidSpec("activation sizes must be positive")
    if spec.iterations < 2:
        raise InvalidSpec("at least 2 iterations required")
    weights = spec.resolved_weights()
    if len(weights) != len(acts):
        raise InvalidSpec("weight list length must match layer count")
    if any(w <= 0 for w in weights):
        raise InvalidSpec("weight sizes must be positive")

    rng = random.Random(spec.seed)
    em = _Emitter(spec, rng)
    layers = len(acts)

    for i in range(layers):
        em.emit(EventKind.MALLOC, f"w{i}", weights[i])
        em.emit(EventKind.WRITE, f"w{i}", weights[i])

    def temp_size(i: int) -> int:
        return max(1, int(acts[i] * spec.temp_ratio))

    period = 0
    for k in range(spec.iterations):
        begin = len(em.events)
        perturb = spec.perturb_first and k == 0
        for i in range(layers):
            h = f"h{i}.{k}"
            em.emit(EventKind.MALLOC, h, acts[i])
            use_temp = spec.temp_ratio > 0
            if use_temp:
                em.emit(EventKind.MALLOC, f"t{i}.{k}", temp_size(i))
            em.emit(EventKind.READ, f"w{i}", weights[i])
            if i > 0:
                em.emit(EventKind.READ, f"h{i - 1}.{k}", acts[i - 1])
            if use_temp:
                em.emit(EventKind.WRITE, f"t{i}.{k}", temp_size(i))
            em.emit(EventKind.WRITE, h, acts[i])
            if use_temp:
                em.emit(EventKind.FREE, f"t{i}.{k}")
            if perturb:
                # one-off autotuning workspace, first iteration only
                ws = max(1, int(acts[i] * rng.uniform(0.2, 0.8)))
                em.emit(EventKind.MALLOC, f"ws{i}", ws)
                em.emit(EventKind.WRITE, f"ws{i}", ws)
                em.emit(EventKind.FREE, f"ws{i}")
        em.emit(EventKind.READ, f"h{layers - 1}.{k}", acts[layers - 1])
        for i in reversed(range(layers)):
            h = f"h{i}.{k}"
            use_temp = spec.temp_ratio > 0
            if use_temp:
                em.emit(EventKind.MALLOC, f"u{i}.{k}", temp_size(i))
            em.emit(EventKind.READ, h, acts[i])
            if use_temp:
                em.emit(EventKind.WRITE, f"u{i}.{k}", temp_size(i))
            em.emit(EventKind.WRITE, f"w{i}", weights[i])
            if use_temp:
                em.emit(EventKind.FREE, f"u{i}.{k}")
            em.emit(EventKind.FREE, h)
        # 1-byte optimizer-step scratch; the malloc/write/read/free tail
        # also keeps the iteration suffix aperiodic in (kind, size)
        # fingerprints, which backward blocks alone are not
        stp = f"step{k}"
        em.emit(EventKind.MALLOC, stp, 1)
        em.emit(EventKind.WRITE, stp, 1)
        em.emit(EventKind.READ, stp, 1)
        em.emit(EventKind.FREE, stp)
        if k > 0:
            period = len(em.events) - begin

    meta = {
        "workload": spec.name,
        "layers": layers,
        "iterations": spec.iterations,
        "period": period,
        "seed": spec.seed,
    }
    return Trace(events=em.events, meta=meta)

"""Shared builders for hand-made traces.

Helpers construct op tuples (kind, var, size) and wrap them into traces
with evenly spaced integer timestamps; sizes only matter on malloc.
"""
import memplan as mp

MIB = 1 << 20
MB = 10 ** 6


def make_trace(ops, spacing_us=10):
    events = [
        mp.TraceEvent(index=i, t_us=spacing_us * i,
                      kind=mp.EventKind(kind), var=var, size=size)
        for i, (kind, var, size) in enumerate(ops)
    ]
    return mp.Trace(events=events)


def congested_weights_ops(iterations=2):
    """Per-iteration weights re-made from scratch plus two transient
    buffers; with a default-speed bus every transfer takes far longer
    than the whole 190 us iteration, so swap waits are unavoidable.

    19 ops per iteration; peak 120 MiB at the 45 MiB malloc.
    """
    ops = []
    for _ in range(iterations):
        ops += [
            ("malloc", "w1", 25 * MIB), ("write", "w1", 0),
            ("malloc", "w2", 25 * MIB), ("write", "w2", 0),
            ("malloc", "w3", 25 * MIB), ("write", "w3", 0),
            ("malloc", "a", 45 * MIB), ("write", "a", 0), ("free", "a", 0),
            ("malloc", "b", 20 * MIB), ("write", "b", 0), ("free", "b", 0),
            ("read", "w3", 0), ("free", "w3", 0),
            ("read", "w2", 0), ("free", "w2", 0),
            ("read", "w1", 0), ("write", "w1", 0), ("free", "w1", 0),
        ]
    return ops


def three_var_peak_ops(iterations=2):
    """Three swap variables whose access gaps all cover a 120 MB peak.

    The peak needs a bump after the last variable's first access (a load
    maximum at a malloc slot can never sit inside that variable's own
    access gap), so a 1 MB scratch buffer tops the 119 MB plateau up to
    exactly 120 MB. The scratch is below the default candidate threshold
    and has no accesses, so only v1/v2/v3 are candidates. 15 ops per
    iteration; the trailing write keeps the tail aperiodic.
    """
    ops = []
    for _ in range(iterations):
        ops += [
            ("malloc", "v1", 45 * MB), ("write", "v1", 0),
            ("malloc", "v2", 40 * MB), ("write", "v2", 0),
            ("malloc", "v3", 34 * MB), ("write", "v3", 0),
            ("malloc", "t", 1 * MB), ("free", "t", 0),
            ("read", "v1", 0), ("free", "v1", 0),
            ("read", "v2", 0), ("free", "v2", 0),
            ("read", "v3", 0), ("write", "v3", 0), ("free", "v3", 0),
        ]
    return ops


def filter_instance_ops():
    """One iteration holds four sized vars around a single peak slot:
    F is accessed only before the peak, B and s straddle it, T has no
    accesses at all."""
    ops = []
    for k in (1, 2):
        ops += [
            ("malloc", f"F{k}", 2 * MIB), ("write", f"F{k}", 0),
            ("read", f"F{k}", 0), ("free", f"F{k}", 0),
            ("malloc", f"B{k}", 2 * MIB), ("write", f"B{k}", 0),
            ("malloc", f"s{k}", 500_000), ("write", f"s{k}", 0),
            ("malloc", f"T{k}", 3 * MIB), ("free", f"T{k}", 0),
            ("read", f"s{k}", 0), ("free", f"s{k}", 0),
            ("write", f"B{k}", 0), ("free", f"B{k}", 0),
        ]
    return ops


def synthetic_profile(loads, spacing=10.0):
    """Bare profile carrying only a load curve, for score math that never
    touches variables or raw events."""
    times = [spacing * r for r in range(len(loads))]
    peak = max(loads)
    return mp.IterationProfile(
        period=len(loads), window=(0, len(loads)), variables=[],
        load=mp.LoadProfile(loads=list(loads), peak_bytes=peak,
                            peak_index=loads.index(peak)),
        op_times_us=times, period_duration_us=spacing * len(loads),
        events=[],
    )

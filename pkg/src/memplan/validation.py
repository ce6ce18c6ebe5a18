"""Input coercion shared by the estimator facade and the CLI."""
from __future__ import annotations

import os

from .iteration import IterationProfile, detect_iteration, extract_lifetimes
from .trace import Trace, load_trace, validate_trace


def as_trace(X) -> Trace:
    """Accept a Trace, a path to a trace file, or a list of events."""
    if isinstance(X, Trace):
        return X
    if isinstance(X, (str, os.PathLike)):
        return load_trace(X)
    if isinstance(X, (list, tuple)):
        trace = Trace(events=list(X))
        validate_trace(trace)
        return trace
    raise TypeError(f"cannot interpret {type(X).__name__} as a trace")


def as_profile(X) -> IterationProfile:
    """Accept an IterationProfile or anything as_trace takes."""
    if isinstance(X, IterationProfile):
        return X
    trace = as_trace(X)
    det = detect_iteration(trace)
    return extract_lifetimes(trace, det.window)


def check_positive(name: str, value) -> None:
    if value is None or value <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")

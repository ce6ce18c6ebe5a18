"""Allocation trace model plus JSONL/CSV parsing and serialization.

A trace is an ordered list of events, one per device memory operation:
Malloc, Free, Read, Write. Indices are contiguous from 0, timestamps are
non-decreasing microseconds, and sizes are positive for Malloc and zero
otherwise. Variable ids are opaque strings; an id may be reused after its
Free.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import InvariantViolation, MalformedRecord

JSONL_KEYS = ("index", "t_us", "kind", "var", "size")
CSV_HEADER = "index,t_us,kind,var,size"


class EventKind(str, Enum):
    MALLOC = "malloc"
    FREE = "free"
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class TraceEvent:
    index: int
    t_us: int
    kind: EventKind
    var: str
    size: int = 0


@dataclass
class Trace:
    events: list[TraceEvent]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]


def validate_trace(events: Iterable[TraceEvent]) -> None:
    """Check stream invariants, raising InvariantViolation on the first failure.

    Checks: contiguous 0-based indices, non-decreasing timestamps, no use
    before alloc, no double free, no malloc of a live id, size constraints.
    """
    live: dict[str, int] = {}
    prev_t = None
    for pos, ev in enumerate(events):
        if ev.index != pos:
            raise InvariantViolation(pos, f"index {ev.index} not contiguous")
        if ev.t_us < 0:
            raise InvariantViolation(pos, "negative timestamp")
        if prev_t is not None and ev.t_us < prev_t:
            raise InvariantViolation(pos, "timestamp decreases")
        prev_t = ev.t_us
        if ev.kind == EventKind.MALLOC:
            if ev.size <= 0:
                raise InvariantViolation(pos, "malloc size must be > 0")
            if ev.var in live:
                raise InvariantViolation(pos, f"malloc of live id {ev.var!r}")
            live[ev.var] = ev.size
        else:
            if ev.size != 0:
                raise InvariantViolation(pos, f"{ev.kind.value} size must be 0")
            if ev.var not in live:
                verb = "free" if ev.kind == EventKind.FREE else "use"
                raise InvariantViolation(pos, f"{verb} of dead id {ev.var!r}")
            if ev.kind == EventKind.FREE:
                del live[ev.var]


def _event_from_fields(line_no: int, index, t_us, kind, var, size) -> TraceEvent:
    try:
        index = int(index)
        t_us = int(t_us)
        size = int(size)
    except (TypeError, ValueError):
        raise MalformedRecord(line_no, "index/t_us/size must be integers")
    try:
        kind = EventKind(kind)
    except ValueError:
        raise MalformedRecord(line_no, f"unknown kind {kind!r}")
    if not isinstance(var, str) or not var:
        raise MalformedRecord(line_no, "var must be a non-empty string")
    return TraceEvent(index=index, t_us=t_us, kind=kind, var=var, size=size)


def _parse_jsonl(text: str) -> list[TraceEvent]:
    events = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"bad JSON: {exc.msg}")
        if not isinstance(rec, dict) or set(rec) != set(JSONL_KEYS):
            raise MalformedRecord(line_no, f"keys must be exactly {set(JSONL_KEYS)}")
        events.append(
            _event_from_fields(
                line_no, rec["index"], rec["t_us"], rec["kind"], rec["var"], rec["size"]
            )
        )
    return events


def _parse_csv(text: str) -> list[TraceEvent]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRecord(1, "empty file, header required")
    if header != CSV_HEADER.split(","):
        raise MalformedRecord(1, f"header must be {CSV_HEADER!r}")
    events = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise MalformedRecord(line_no, f"expected 5 fields, got {len(row)}")
        events.append(_event_from_fields(line_no, *row))
    return events


def parse_trace(data: bytes | str, format: str = "jsonl") -> Trace:
    """Parse a trace from JSONL or CSV bytes/text and validate it."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if format == "jsonl":
        events = _parse_jsonl(data)
    elif format == "csv":
        events = _parse_csv(data)
    else:
        raise ValueError(f"unknown format {format!r}")
    validate_trace(events)
    return Trace(events=events)


def serialize_trace(trace: Trace, format: str = "jsonl") -> str:
    """Serialize to the canonical on-disk form (byte-stable round trips)."""
    if format == "jsonl":
        out = []
        for ev in trace.events:
            rec = {
                "index": ev.index,
                "t_us": ev.t_us,
                "kind": ev.kind.value,
                "var": ev.var,
                "size": ev.size,
            }
            out.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(out) + ("\n" if out else "")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for ev in trace.events:
            writer.writerow([ev.index, ev.t_us, ev.kind.value, ev.var, ev.size])
        return buf.getvalue()
    raise ValueError(f"unknown format {format!r}")


def load_trace(path, format: str | None = None) -> Trace:
    """Read a trace file; format inferred from the suffix unless given."""
    path = str(path)
    if format is None:
        format = "csv" if path.endswith(".csv") else "jsonl"
    with open(path, "rb") as fh:
        return parse_trace(fh.read(), format=format)


def save_trace(trace: Trace, path, format: str | None = None) -> None:
    path = str(path)
    if format is None:
        format = "csv" if path.endswith(".csv") else "jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_trace(trace, format=format))

"""Exception types shared across memplan modules."""


class MemplanError(Exception):
    """Base class for all memplan errors."""


class MalformedRecord(MemplanError):
    """A trace file record could not be decoded.

    `line` is the 1-based line number of the offending record.
    """

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvariantViolation(MemplanError):
    """A trace violates an event-stream invariant.

    `index` is the 0-based event index where the violation was detected.
    """

    def __init__(self, index: int, reason: str):
        super().__init__(f"event {index}: {reason}")
        self.index = index
        self.reason = reason


class InvalidSpec(MemplanError):
    """A workload spec or configuration value is unusable."""


class PeriodNotFound(MemplanError):
    """No repeating iteration could be detected in the trace."""


class GraphTooLarge(MemplanError):
    """Exhaustive search was requested on a graph above its size cap."""


class MissingVariable(MemplanError):
    """A plan has no offset for a variable the lookup table needs."""


class LimitUnreachable(MemplanError):
    """The requested load limit is below what swapping can achieve.

    Carries the requested limit and the best achievable peak in bytes.
    """

    def __init__(self, limit_bytes: int, achievable_bytes: int):
        super().__init__(
            f"limit {limit_bytes} B below achievable peak {achievable_bytes} B"
        )
        self.limit_bytes = limit_bytes
        self.achievable_bytes = achievable_bytes


class SwapDeadlock(MemplanError):
    """Simulation cannot make progress without exceeding the limit.

    `index` is the trace-relative operation index that blocked forever.
    """

    def __init__(self, index: int, reason: str = "no pending swap-out can free space"):
        super().__init__(f"op {index}: {reason}")
        self.index = index
        self.reason = reason

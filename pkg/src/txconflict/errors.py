"""Exception types raised across the package."""

from __future__ import annotations


class TxConflictError(Exception):
    """Base class for every error raised by txconflict."""


class TraceParseError(TxConflictError, ValueError):
    def __init__(self, message: str, tx_index: int | None = None):
        self.tx_index = tx_index
        if tx_index is not None:
            message = f"tx {tx_index}: {message}"
        super().__init__(message)


class UnknownCallTypeError(TraceParseError):
    def __init__(self, call_type: str, tx_index: int | None = None):
        self.call_type = call_type
        super().__init__(f"unknown call type {call_type!r}", tx_index)


class DepthLimitError(TraceParseError):
    pass


class ModeMismatchError(TraceParseError):
    pass


class MissingTraceError(TxConflictError, ValueError):
    """A tracer output required by the requested method was not fetched."""


class MissingDiffError(MissingTraceError):
    pass


class GranularityError(TxConflictError, ValueError):
    pass


class ImproperColoringError(TxConflictError, ValueError):
    pass


class CliqueBudgetExceeded(TxConflictError):
    """The clique search ran out of node expansions.

    ``result`` holds the best clique found so far, which is only a lower bound.
    """

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"clique search budget exhausted after {result.expansions} expansions; "
            f"best clique found has size {result.size} (lower bound)"
        )


class RpcError(TxConflictError):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(f"rpc error {code}: {message}")


class ConfigurationError(TxConflictError):
    """The node cannot serve the request at all (missing debug API, unknown tracer)."""


class TransportError(TxConflictError):
    pass


class RecordFormatError(TxConflictError, ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SchemaVersionError(TxConflictError, ValueError):
    pass


class UnknownMetricError(TxConflictError, KeyError):
    def __init__(self, name: str, valid):
        self.name = name
        self.valid = sorted(valid)
        super().__init__(f"unknown metric {name!r}; valid names: {', '.join(self.valid)}")

    def __str__(self) -> str:
        return self.args[0]


class InsufficientDataError(TxConflictError, ValueError):
    pass

from __future__ import annotations
from typing import Any, FrozenSet, Optional


class DoublesError(Exception):
    """Base class for everything the doubles package raises on purpose."""


class ShapeError(DoublesError):
    pass


class InvalidInputError(DoublesError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class UnknownKindError(DoublesError):
    pass


class DoubleValidationError(DoublesError):
    """Raised by assemble_double; `report` keeps at most the first 100 violations."""

    def __init__(self, message: str, report: Any):
        super().__init__(message)
        self.report = report


class IncompatibleOperandsError(DoublesError):
    pass


class LadderError(DoublesError):
    pass


class DslError(DoublesError):
    pass


class ParseError(DslError):
    def __init__(self, position: int, expected: FrozenSet[str], message: str = ""):
        self.position = position
        self.expected = frozenset(expected)
        detail = message or f"expected one of {sorted(self.expected)}"
        super().__init__(f"parse error at byte {position}: {detail}")


class EvalError(DslError):
    def __init__(self, reason: str, message: str, value: Optional[int] = None):
        # reason: floor | arity | overflow
        self.reason = reason
        self.value = value
        super().__init__(message)


class NoWitnessError(DoublesError):
    def __init__(self, message: str, verdict: Any = None):
        super().__init__(message)
        self.verdict = verdict


class LadderTooShortError(DoublesError):
    def __init__(self, message: str, achievable_k: int):
        super().__init__(message)
        self.achievable_k = achievable_k


class PreconditionError(DoublesError):
    pass


class InternalInvariantError(DoublesError):
    pass


class CodecError(DoublesError):
    pass


class BandDivergenceError(DoublesError):
    """The per-band minima of F stay bounded over the observed G-bands."""

    def __init__(self, message: str, band: int, bound: int):
        super().__init__(message)
        self.band = band
        self.bound = bound

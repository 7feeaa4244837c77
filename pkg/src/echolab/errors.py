"""Exception hierarchy shared by the netlist, engines and measurements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True, slots=True)
class SourceSpan:
    """Location of a token in netlist text (1-based line and column)."""

    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class InputError(ValueError):
    """Raised for malformed user input. Maps to CLI exit code 2."""

    def __init__(self, message: str, *, span: Optional[SourceSpan] = None) -> None:
        self.span = span
        self.message = message
        prefix = f"line {span.line}, column {span.column}: " if span else ""
        super().__init__(prefix + message)


class ComputationError(RuntimeError):
    """Raised when an analysis or measurement cannot produce a result. Exit code 3."""


class UnknownElementKind(InputError):
    pass


class DuplicateName(InputError):
    pass


class UnresolvedNode(InputError):
    pass


class MalformedValue(InputError):
    pass


class UnknownDirective(InputError):
    pass


class UnknownPreset(InputError):
    pass


class PortArityMismatch(InputError):
    pass


class InvalidParams(InputError):
    pass


class StepTooCoarse(InputError):
    """The transient step violates the line-delay resolution rule."""


class NyquistViolation(InputError):
    pass


class SingularSystem(ComputationError):
    """The assembled MNA matrix has a zero pivot."""

    def __init__(self, pivot: int, unknown: Optional[str] = None) -> None:
        self.pivot = pivot
        self.unknown = unknown
        label = f" ({unknown})" if unknown else ""
        super().__init__(f"singular system at pivot {pivot}{label}")


class SessionClosed(ComputationError):
    pass


class NoPeak(ComputationError):
    pass


class TooShort(ComputationError):
    pass


class LossOfLock(ComputationError):
    """The tracking loop sat at a band edge too long; ``state`` holds its log."""

    def __init__(self, message: str, state: object = None) -> None:
        self.state = state
        super().__init__(message)


class PoleProximity(ComputationError):
    pass


class InvalidCircuit(InputError):
    """A circuit handed to an engine failed structural validation."""

    def __init__(self, diagnostics: list) -> None:
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "invalid circuit")

# domain/exceptions.py
from typing import Iterable, Optional


class AnalyzerError(Exception):
    """Base class for every error raised by the analyzer."""


class FrontendError(AnalyzerError):
    """Error found while reading a Mini-C translation unit."""

    def __init__(self, message: str, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class LexError(FrontendError):
    """Illegal character or unterminated literal."""


class ParseError(FrontendError):
    """Token stream does not match the Mini-C grammar."""

    def __init__(self, message: str, location=None, expected: Optional[Iterable[str]] = None):
        self.expected = sorted(set(expected or ()))
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, location)


class UndeclaredIdentifier(FrontendError):
    """An identifier does not resolve to any declaration."""


class TypeMismatch(FrontendError):
    """Operands or assignment sides have incompatible types."""


class UnsupportedConstruct(FrontendError):
    """Construct outside of Mini-C."""


class DuplicateDefinition(FrontendError):
    """Two declarations (or two ISRs) share one name."""


class RecursionUnsupported(FrontendError):
    """The call graph contains a cycle."""


class EntryPointError(FrontendError):
    """The program has no (or more than one) entry function."""


class SpecError(AnalyzerError):
    """Invalid hardware description or mismatch with the program."""


class DimensionMismatch(AnalyzerError):
    """Octagons over different variable sets were combined."""


class Diverged(AnalyzerError):
    """The fixed point exceeded its node-visit budget."""


class OracleError(AnalyzerError):
    """Base class for concrete oracle limits."""


class ScheduleExplosion(OracleError):
    """A full expression has more schedules than the configured cap."""


class StateBudgetExceeded(OracleError):
    """Exhaustive enumeration visited more states than allowed."""

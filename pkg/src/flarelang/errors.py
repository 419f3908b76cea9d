"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .lang.span import SourceSpan


class FlareError(Exception):
    """Base class for diagnostics that point at a source location."""

    severity = "error"

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def diagnostic(self) -> str:
        if self.span is None:
            return f"<unknown>:0:0: {self.severity}: {self.message}"
        return (
            f"{self.span.file}:{self.span.start_line}:{self.span.start_col}: "
            f"{self.severity}: {self.message}"
        )


class LexError(FlareError):
    pass


class ParseError(FlareError):
    def __init__(self, span: SourceSpan, expected: Iterable[str], found: str):
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        wanted = " or ".join(self.expected)
        super().__init__(f"expected {wanted}, found {found}", span)


class ResolveError(FlareError):
    def __init__(self, message: str, span: SourceSpan | None = None, name: str | None = None):
        super().__init__(message, span)
        self.name = name


class CompositionError(FlareError):
    pass


class NotFound(FlareError, LookupError):
    pass


class FlareRuntimeError(FlareError):
    """Division by zero, arity mismatch and similar faults in the interpreted program."""


class StepLimitExceeded(FlareError):
    def __init__(self, max_steps: int, trace):
        super().__init__(f"step limit of {max_steps} exceeded")
        self.max_steps = max_steps
        self.trace = trace


class InvariantError(AssertionError):
    """An internal analysis invariant was violated (a bug, not a user error)."""

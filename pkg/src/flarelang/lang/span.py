from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based source region; the end position is inclusive."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if min(self.start_line, self.start_col, self.end_line, self.end_col) < 1:
            raise ValueError(f"span positions are 1-based: {self!r}")
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"span start after end: {self!r}")

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)

    @property
    def end(self) -> tuple[int, int]:
        return (self.end_line, self.end_col)

    def contains(self, other: SourceSpan) -> bool:
        return self.start <= other.start and other.end <= self.end

    def contains_position(self, line: int, col: int) -> bool:
        return self.start <= (line, col) <= self.end

    def to(self, other: SourceSpan) -> SourceSpan:
        """Span running from the start of ``self`` to the end of ``other``."""
        return SourceSpan(self.file, self.start_line, self.start_col, other.end_line, other.end_col)

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "line": self.start_line,
            "col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }


def cover(spans) -> SourceSpan:
    spans = list(spans)
    first = min(spans, key=lambda s: s.start)
    last = max(spans, key=lambda s: s.end)
    return first.to(last)

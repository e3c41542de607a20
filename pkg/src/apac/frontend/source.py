from __future__ import annotations

import bisect
from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class SourceSpan:
    """Half-open byte range ``[start, end)`` of one source file."""

    start: int
    end: int
    file_id: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    def contains(self, other: "SourceSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "SourceSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def cover(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(min(self.start, other.start), max(self.end, other.end), self.file_id)


class SourceFile:
    """Input text addressed by byte offsets.

    The bytes are held as a latin-1 decoded string, so string indices are byte
    offsets and splicing preserves every original byte.
    """

    _next_id = 0

    def __init__(self, data: bytes | str, name: str = "<input>"):
        if isinstance(data, str):
            data = data.encode("utf-8")
        data.decode("utf-8")  # pre-condition: valid UTF-8, raises otherwise
        self.name = name
        self.data = data
        self.text = data.decode("latin-1")
        self.file_id = SourceFile._next_id
        SourceFile._next_id += 1
        self._line_starts = [0]
        for i, ch in enumerate(self.text):
            if ch == "\n":
                self._line_starts.append(i + 1)

    def __len__(self):
        return len(self.text)

    def span(self, start: int, end: int) -> SourceSpan:
        if end > len(self.text):
            raise ValueError("span beyond end of file")
        return SourceSpan(start, end, self.file_id)

    def slice(self, span: SourceSpan) -> str:
        return self.text[span.start:span.end]

    def line_col(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self._line_starts, offset)
        return line, offset - self._line_starts[line - 1] + 1

    def line_indent(self, offset: int) -> str:
        line, _ = self.line_col(offset)
        start = self._line_starts[line - 1]
        i = start
        while i < len(self.text) and self.text[i] in " \t":
            i += 1
        return self.text[start:i]

    def location(self, span: SourceSpan) -> str:
        line, col = self.line_col(span.start)
        return f"{self.name}:{line}:{col}"

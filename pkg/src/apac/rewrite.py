"""Span-anchored edits against an immutable source buffer.

Offsets always refer to the original text; edits never see each other's
output. Insertions landing on the same offset come out ordered by
``(phase, seq)``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from .frontend.source import SourceFile, SourceSpan


class EditKind(enum.Enum):
    INSERT_BEFORE = "InsertBefore"
    INSERT_AFTER = "InsertAfter"
    REPLACE = "Replace"


@dataclass(frozen=True)
class Edit:
    kind: EditKind
    anchor: SourceSpan
    text: str
    phase: int = 0
    seq: int = field(default=-1, compare=False)

    @property
    def offset(self) -> int:
        """Offset at which the text is spliced (start of a Replace)."""
        if self.kind is EditKind.INSERT_AFTER:
            return self.anchor.end
        return self.anchor.start


class OverlapError(ValueError):
    def __init__(self, first: SourceSpan, second: SourceSpan):
        super().__init__(
            f"edit at [{second.start}, {second.end}) overlaps replacement [{first.start}, {first.end})"
        )
        self.first = first
        self.second = second


class RewriteBuffer:
    def __init__(self, source: SourceFile | str):
        self.text = source.text if isinstance(source, SourceFile) else source
        self.edits: list[Edit] = []
        self._replaces: list[Edit] = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return len(self.edits)

    def record(self, edit: Edit) -> Edit:
        a = edit.anchor
        if not 0 <= a.start <= a.end <= len(self.text):
            raise ValueError(f"anchor [{a.start}, {a.end}) outside buffer of {len(self.text)} bytes")
        if edit.seq < 0:
            edit = Edit(edit.kind, edit.anchor, edit.text, edit.phase, next(self._seq))
        if edit.kind is EditKind.REPLACE:
            for r in self._replaces:
                if _overlap(r.anchor, a):
                    raise OverlapError(r.anchor, a)
            for e in self.edits:
                if e.kind is not EditKind.REPLACE and a.start < e.offset < a.end:
                    raise OverlapError(a, e.anchor)
            self._replaces.append(edit)
        else:
            for r in self._replaces:
                if r.anchor.start < edit.offset < r.anchor.end:
                    raise OverlapError(r.anchor, a)
        self.edits.append(edit)
        return edit

    def insert_before(self, span: SourceSpan, text: str, phase: int = 0) -> Edit:
        return self.record(Edit(EditKind.INSERT_BEFORE, span, text, phase))

    def insert_after(self, span: SourceSpan, text: str, phase: int = 0) -> Edit:
        return self.record(Edit(EditKind.INSERT_AFTER, span, text, phase))

    def replace(self, span: SourceSpan, text: str, phase: int = 0) -> Edit:
        return self.record(Edit(EditKind.REPLACE, span, text, phase))

    def materialize(self) -> str:
        # Within one offset: zero-width edits in (phase, seq) order, then the
        # replacement that starts there (if any) consumes its span.
        points = sorted(
            self.edits,
            key=lambda e: (e.offset, e.anchor.end > e.anchor.start and e.kind is EditKind.REPLACE,
                           e.phase, e.seq),
        )
        out: list[str] = []
        pos = 0
        for e in points:
            off = e.offset
            if off > pos:
                out.append(self.text[pos:off])
                pos = off
            out.append(e.text)
            if e.kind is EditKind.REPLACE:
                pos = max(pos, e.anchor.end)
        out.append(self.text[pos:])
        return "".join(out)


def _overlap(a: SourceSpan, b: SourceSpan) -> bool:
    if a.start == a.end or b.start == b.end:
        return False
    return a.start < b.end and b.start < a.end


def reindent(text: str, indent: str) -> str:
    """Prefix every non-empty line after the first with ``indent``."""
    lines = text.split("\n")
    return "\n".join([lines[0]] + [indent + ln if ln.strip() else ln for ln in lines[1:]])

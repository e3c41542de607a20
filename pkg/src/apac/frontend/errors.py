from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import TextIO

from .source import SourceFile, SourceSpan


class FrontendError(Exception):
    def __init__(self, span: SourceSpan | None, message: str):
        super().__init__(message)
        self.span = span
        self.message = message

    def format(self, source: SourceFile | None) -> str:
        if source is None or self.span is None:
            return f"<input>: error: {self.message}"
        return f"{source.location(self.span)}: error: {self.message}"


class SourceSyntaxError(FrontendError):
    """Grammar violation in the input."""


class UnsupportedConstruct(FrontendError):
    """Valid C++ outside the supported subset."""

    def __init__(self, span: SourceSpan | None, construct: str):
        super().__init__(span, f"unsupported construct: {construct}")
        self.construct = construct


class ResolutionError(FrontendError):
    """Ambiguous or inconsistent name resolution."""


@dataclass
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    message: str
    span: SourceSpan | None = None

    def format(self, source: SourceFile | None) -> str:
        if source is None or self.span is None:
            where = source.name if source is not None else "<input>"
            return f"{where}: {self.severity}: {self.message}"
        return f"{source.location(self.span)}: {self.severity}: {self.message}"


def emit(diags: list[Diagnostic], source: SourceFile | None, stream: TextIO = sys.stderr) -> None:
    for d in diags:
        print(d.format(source), file=stream)

"""Task-limiting strategies.

Every taskgroup computes one activation boolean at entry and all of its tasks
carry ``if(<boolean>)``. Two strategies decide the boolean: a process-wide
live-task counter (``count:N``) and a per-thread nesting depth (``depth:D``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

COUNT_VAR = "apac_task_count"
DEPTH_VAR = "apac_depth"


@dataclass(frozen=True)
class ThrottleStrategy:
    kind: str  # none | count | depth
    limit: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("none", "count", "depth"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "none":
            if self.limit is not None:
                raise ValueError("strategy 'none' takes no limit")
        elif self.limit is None:
            raise ValueError(f"strategy '{self.kind}' needs a limit")
        elif self.kind == "count" and self.limit < 1:
            raise ValueError("count limit must be positive")
        elif self.kind == "depth" and self.limit < 0:
            raise ValueError("depth limit must be non-negative")

    def __str__(self) -> str:
        return self.kind if self.limit is None else f"{self.kind}:{self.limit}"

    @property
    def throttled(self) -> bool:
        return self.kind != "none"


UNLIMITED = ThrottleStrategy("none")
DEFAULT_STRATEGY = ThrottleStrategy("depth", 5)


def MaxCount(limit: int) -> ThrottleStrategy:
    return ThrottleStrategy("count", limit)


def MaxDepth(limit: int) -> ThrottleStrategy:
    return ThrottleStrategy("depth", limit)


def parse_strategy(text: str | ThrottleStrategy | None) -> ThrottleStrategy:
    """``none``, ``count:N`` or ``depth:D``."""
    if text is None:
        return DEFAULT_STRATEGY
    if isinstance(text, ThrottleStrategy):
        return text
    t = text.strip().lower()
    if t in ("none", "unlimited"):
        return UNLIMITED
    m = re.fullmatch(r"(count|depth):(-?\d+)", t)
    if not m:
        raise ValueError(f"bad strategy {text!r}; expected none, count:N or depth:D")
    return ThrottleStrategy(m.group(1), int(m.group(2)))


class Instrumentation:
    """Text fragments a strategy contributes to the emitted code."""

    def __init__(self, strategy: ThrottleStrategy, names):
        self.strategy = strategy
        kind = strategy.kind
        self.count_var = names.fresh(COUNT_VAR) if kind == "count" else None
        self.depth_var = names.fresh(DEPTH_VAR) if kind == "depth" else None
        self.depth_local = names.fresh("apac_depth_local") if kind == "depth" else None
        self.depth_saved = names.fresh("apac_depth_saved") if kind == "depth" else None
        self.count_seen = names.fresh("apac_count_seen") if kind == "count" else None

    def globals(self) -> list[str]:
        if self.count_var:
            return [f"static int {self.count_var} = 0;"]
        if self.depth_var:
            return [f"static int {self.depth_var} = 0;", f"#pragma omp threadprivate({self.depth_var})"]
        return []

    def preamble(self, active: str) -> list[str]:
        """Lines computing the activation boolean at taskgroup entry."""
        s = self.strategy
        if s.kind == "count":
            return [
                f"int {self.count_seen};",
                "#pragma omp atomic read",
                f"{self.count_seen} = {self.count_var};",
                f"const bool {active} = {self.count_seen} < {s.limit};",
            ]
        if s.kind == "depth":
            return [
                f"const int {self.depth_local} = {self.depth_var};",
                f"const bool {active} = {self.depth_local} < {s.limit};",
            ]
        return []

    def if_clause(self, active: str) -> Optional[str]:
        return f"if({active})" if self.strategy.throttled else None

    def firstprivate(self) -> list[str]:
        return [self.depth_local] if self.depth_local else []

    def before_task(self, active: str) -> list[str]:
        if self.count_var:
            return [f"if({active}){{", "#pragma omp atomic", f"{self.count_var}++;", "}"]
        return []

    def task_prologue(self) -> list[str]:
        if self.depth_var:
            return [
                f"const int {self.depth_saved} = {self.depth_var};",
                f"{self.depth_var} = {self.depth_local} + 1;",
            ]
        return []

    def task_epilogue(self, active: str) -> list[str]:
        if self.count_var:
            return [f"if({active}){{", "#pragma omp atomic", f"{self.count_var}--;", "}"]
        if self.depth_var:
            return [f"{self.depth_var} = {self.depth_saved};"]
        return []

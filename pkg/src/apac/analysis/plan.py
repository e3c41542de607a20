"""Structured transformation plans.

A plan says, per function, which statements turn into tasks, where
taskwaits go, which scope-local variables move to the heap and how returns
are rewritten. The text emitter and the simulator both consume it, so the
emitted annotations and the simulated ones cannot drift apart.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from ..frontend import nodes as n
from ..frontend.source import SourceSpan
from ..frontend.symbols import CallSiteInfo, FunctionInfo, VarInfo
from .access import DependClause


class SyncReason(enum.Enum):
    COHERENCY = "Coherency"
    INDEX_DEPENDENCY = "IndexDependency"
    RETURN_BARRIER = "ReturnBarrier"


@dataclass(eq=False)
class SyncPoint:
    """A taskwait.

    ``key`` is ``("before", stmt_nid, step)`` for a taskwait ahead of step
    ``step`` of a statement, ``("end", block_nid)`` for one just before a
    scope closes and ``("after", stmt_nid)`` for one following a loop whose
    induction variable goes out of scope.
    """

    position: SourceSpan
    reason: SyncReason
    key: tuple


@dataclass(eq=False)
class PromotionCandidate:
    var: VarInfo
    decl_span: SourceSpan
    scope_end_span: SourceSpan
    is_alias: bool
    ptr_name: Optional[str] = None  # heap pointer name, set when promoted

    @property
    def name(self) -> str:
        return self.var.name


@dataclass(eq=False)
class TaskPlan:
    """One emitted task.

    ``kind`` is ``"call"`` for a taskified call and ``"cleanup"`` for the
    task releasing a promoted variable.
    """

    kind: str
    depend: DependClause
    ins: tuple  # VarInfo, parallel to depend.in_vars
    inouts: tuple  # VarInfo, parallel to depend.inout_vars
    firstprivate: tuple = ()  # VarInfo captured by value
    site: Optional[CallSiteInfo] = None
    call: Optional[n.Call] = None
    subst: dict = field(default_factory=dict)  # call nid -> temporary VarInfo
    assign_var: Optional[VarInfo] = None  # fresh declaration or temporary receiving the result
    assign_expr: Optional[n.Expr] = None  # existing lvalue receiving the result
    assign_op: str = "="
    cleanup: Optional[PromotionCandidate] = None
    body_text: str = ""
    label: str = ""
    preceded_by_taskwait: bool = False

    @property
    def firstprivate_names(self) -> tuple:
        names = [v.name for v in self.firstprivate]
        if self.cleanup is not None:
            names.append(self.cleanup.ptr_name)
        return tuple(names)


@dataclass(eq=False)
class DeclStep:
    var: VarInfo
    type: n.TypeRef
    init: Optional[n.Expr] = None
    subst: dict = field(default_factory=dict)
    init_text: Optional[str] = None
    promotion: Optional[PromotionCandidate] = None


@dataclass(eq=False)
class TaskStep:
    task: TaskPlan


@dataclass(eq=False)
class ResidualStep:
    """The original statement, with hoisted calls replaced by temporaries."""

    stmt: n.Stmt
    subst: dict = field(default_factory=dict)


Step = Union[DeclStep, TaskStep, ResidualStep]


@dataclass(eq=False)
class LoweredStmt:
    stmt: n.Stmt
    steps: list


class ReturnMode(enum.Enum):
    NONE = "none"  # no taskgroup or no return statements
    TRAILING = "trailing"  # the taskgroup closes before a final ``return <constant>;``
    GOTO = "goto"  # every return becomes taskwait + result assignment + goto


@dataclass(eq=False)
class FunctionPlan:
    func: FunctionInfo
    needs_taskgroup: bool
    lowered: dict = field(default_factory=dict)  # stmt nid -> LoweredStmt
    tasks: list = field(default_factory=list)  # TaskPlan in source order
    syncs: dict = field(default_factory=dict)  # key -> SyncPoint
    promotions: list = field(default_factory=list)  # PromotionCandidate (aliases included)
    promoted: dict = field(default_factory=dict)  # id(VarInfo) -> PromotionCandidate
    scope_cleanups: dict = field(default_factory=dict)  # block nid -> [TaskPlan]
    exit_cleanups: dict = field(default_factory=dict)  # jump stmt nid -> [TaskPlan]
    temps: list = field(default_factory=list)  # VarInfo of hoisted temporaries
    return_mode: ReturnMode = ReturnMode.NONE
    trailing_return: Optional[n.Return] = None
    res_var: Optional[str] = None
    end_label: Optional[str] = None
    inner_block: bool = False
    activation_var: str = "apac_active"
    warnings: list = field(default_factory=list)

    def sync_before(self, stmt: n.Node, step: int = 0) -> Optional[SyncPoint]:
        return self.syncs.get(("before", stmt.nid, step))

    def sync_end(self, block: n.Node) -> Optional[SyncPoint]:
        return self.syncs.get(("end", block.nid))

    def sync_after(self, stmt: n.Node) -> Optional[SyncPoint]:
        return self.syncs.get(("after", stmt.nid))

    def is_promoted(self, var: VarInfo) -> bool:
        return id(var) in self.promoted


@dataclass
class PlanOptions:
    """Knobs for the planner.

    ``exclude`` names functions left untouched. ``suppress_syncs`` drops
    taskwaits by key and ``promotion`` selects how scope locals used by
    tasks are handled: ``"task"`` (heap + cleanup task), ``"inline"`` (heap
    released inline at scope end) or ``"none"`` (left on the stack). The
    last two exist to show that the cleanup task is load-bearing.
    """

    exclude: frozenset = frozenset()
    suppress_syncs: frozenset = frozenset()
    promotion: str = "task"


@dataclass(eq=False)
class UnitPlan:
    functions: dict  # FunctionInfo -> FunctionPlan
    order: list  # FunctionInfo in source order
    taskifiable: set  # id(FunctionInfo) of taskifiable callees
    warnings: list
    options: PlanOptions
    names: object = None  # NameAllocator used for unit-level names

    def plan_of(self, func: FunctionInfo) -> FunctionPlan:
        return self.functions[func]

    @property
    def any_taskgroup(self) -> bool:
        return any(p.needs_taskgroup for p in self.functions.values())

"""Dependency analysis and transformation planning."""
from .access import (
    AccessMode,
    ArityMismatch,
    DependClause,
    DependVars,
    classify_call,
    classify_parameter,
    depend_vars,
    find_index_dependencies,
)
from .plan import (
    DeclStep,
    FunctionPlan,
    LoweredStmt,
    PlanOptions,
    PromotionCandidate,
    ResidualStep,
    ReturnMode,
    SyncPoint,
    SyncReason,
    TaskPlan,
    TaskStep,
    UnitPlan,
)
from .planner import NameAllocator, Planner, analyze
from .report import analysis_report, ordered_syncs

__all__ = [
    "AccessMode",
    "ArityMismatch",
    "DeclStep",
    "DependClause",
    "DependVars",
    "FunctionPlan",
    "LoweredStmt",
    "NameAllocator",
    "PlanOptions",
    "Planner",
    "PromotionCandidate",
    "ResidualStep",
    "ReturnMode",
    "SyncPoint",
    "SyncReason",
    "TaskPlan",
    "TaskStep",
    "UnitPlan",
    "analysis_report",
    "analyze",
    "classify_call",
    "classify_parameter",
    "depend_vars",
    "find_index_dependencies",
    "ordered_syncs",
]

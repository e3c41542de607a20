"""JSON-ready summaries of a unit plan."""
from __future__ import annotations

from ..frontend import nodes as n
from .plan import FunctionPlan, SyncPoint, TaskPlan, UnitPlan


def _line(tree: n.TranslationUnit, offset: int) -> int:
    return tree.source.line_col(offset)[0]


def ordered_syncs(fp: FunctionPlan) -> list[SyncPoint]:
    """SyncPoints of a function in source order; the index is their public handle."""
    return sorted(fp.syncs.values(), key=lambda s: (s.position.start, s.key[0] != "before", s.key))


def _task(tree: n.TranslationUnit, t: TaskPlan) -> dict:
    out = {
        "kind": t.kind,
        "label": t.label,
        "depend": {"in": list(t.depend.in_vars), "inout": list(t.depend.inout_vars)},
        "firstprivate": list(t.firstprivate_names),
        "body": t.body_text,
    }
    if t.call is not None:
        out["callee"] = t.call.callee_name
        out["line"] = _line(tree, t.call.span.start)
    return out


def function_report(tree: n.TranslationUnit, fp: FunctionPlan) -> dict:
    return {
        "function": fp.func.qualified_name,
        "line": _line(tree, fp.func.node.span.start),
        "taskgroup": fp.needs_taskgroup,
        "return_mode": fp.return_mode.value,
        "tasks": [_task(tree, t) for t in fp.tasks],
        "syncs": [
            {
                "index": k,
                "reason": s.reason.value,
                "line": _line(tree, s.position.start),
                "where": s.key[0],
            }
            for k, s in enumerate(ordered_syncs(fp))
        ],
        "promotions": [
            {
                "var": c.name,
                "line": _line(tree, c.decl_span.start),
                "is_alias": c.is_alias,
                "promoted": c.ptr_name is not None,
                "pointer": c.ptr_name,
            }
            for c in fp.promotions
        ],
        "cleanup_tasks": sum(len(v) for v in fp.scope_cleanups.values())
        + sum(len(v) for v in fp.exit_cleanups.values()),
    }


def analysis_report(tree: n.TranslationUnit, plan: UnitPlan) -> dict:
    return {
        "file": tree.source.name,
        "functions": [function_report(tree, plan.functions[f]) for f in plan.order],
        "warnings": [
            {"message": d.message, "line": _line(tree, d.span.start) if d.span is not None else None}
            for d in plan.warnings
        ],
    }

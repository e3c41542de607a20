"""Turns a :class:`UnitPlan` into OpenMP-annotated source text."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .analysis import (
    DeclStep,
    FunctionPlan,
    LoweredStmt,
    PlanOptions,
    ResidualStep,
    ReturnMode,
    TaskPlan,
    TaskStep,
    UnitPlan,
    analyze,
)
from .frontend import nodes as n
from .frontend.parser import parse_translation_unit
from .frontend.source import SourceFile, SourceSpan
from .frontend.symbols import Symbols
from .rewrite import Edit, RewriteBuffer
from .throttle import Instrumentation, ThrottleStrategy, parse_strategy

# edit phases; inserts sharing an offset come out in this order
WRAP_OPEN = 0
GROUP_OPEN = 1
SYNC = 2
BODY = 3
CLEANUP = 4
GROUP_CLOSE = 5
WRAP_CLOSE = 6

INDENT = "    "

# generated directives are bracketed by these until the text is materialized
_OPEN, _CLOSE = "\x01", "\x02"
_PRAGMA = re.compile(r"#pragma omp[^\n]*")
_MARKED = re.compile("(\x01[^\x02]*\x02)")


@dataclass
class TransformResult:
    text: str
    plan: UnitPlan
    edits: list
    strategy: ThrottleStrategy
    tree: n.TranslationUnit = field(repr=False, default=None)

    @property
    def changed(self) -> bool:
        return bool(self.edits)


def _lines(lines: list[str], indent: str) -> str:
    """Join ``lines`` so that each lands on its own line at ``indent``."""
    return ("\n" + indent).join(lines)


class Transformer:
    def __init__(self, tree: n.TranslationUnit, plan: UnitPlan, strategy: ThrottleStrategy):
        self.tree = tree
        self.source: SourceFile = tree.source
        self.plan = plan
        self.strategy = strategy
        self.buf = RewriteBuffer(self.source)
        self.instr = Instrumentation(strategy, plan.names)

    # ------------------------------------------------------------ unit

    def run(self) -> RewriteBuffer:
        if not self.plan.any_taskgroup:
            return self.buf
        self._emit_globals()
        for func, fp in self.plan.functions.items():
            if fp.needs_taskgroup:
                self._emit_function(fp)
        return self.buf

    def _emit_globals(self) -> None:
        lines = self.instr.globals()
        if not lines:
            return
        first = next(
            (it for it in self.tree.items if isinstance(it, (n.FunctionDef, n.ClassDef))),
            None,
        )
        if first is None:
            return
        self.buf.insert_before(first.span, "\n".join(lines) + "\n", GROUP_OPEN)

    # ------------------------------------------------------------ function

    def _emit_function(self, fp: FunctionPlan) -> None:
        fn = fp.func.node
        body = fn.body
        self.fp = fp
        self.wrapped: set = set()
        ind = self.source.line_indent(fn.span.start)
        inner = ind + INDENT
        active = fp.activation_var
        head = []
        if fp.res_var:
            head.append(f"{fp.func.return_type.without_const().spelling(fp.res_var)};")
        head.extend(self.instr.preamble(active))
        if fp.func.is_main:
            head += ["#pragma omp parallel", "#pragma omp master"]
        head += ["#pragma omp taskgroup", "{"]
        if fp.inner_block:
            head.append("{")
        open_brace = SourceSpan(body.span.start, body.span.start + 1, body.span.file_id)
        self.buf.insert_after(open_brace, "\n" + inner + _lines(head, inner), GROUP_OPEN)

        for s in body.stmts:
            if s is fp.trailing_return:
                continue
            self._emit_stmt(s)

        tail = []
        if fp.inner_block:
            tail += ["#pragma omp taskwait", "}"]
        if fp.end_label:
            tail.append(f"{fp.end_label}: ;")
        tail.append("}")
        if fp.return_mode is ReturnMode.TRAILING:
            ret = fp.trailing_return
            rind = self.source.line_indent(ret.span.start)
            self.buf.insert_before(ret.span, _lines(tail, rind) + "\n" + rind, GROUP_CLOSE)
            return
        if fp.res_var:
            tail.append(f"return {fp.res_var};")
        self.buf.insert_before(body.close_span, INDENT + _lines(tail, inner) + "\n" + ind, GROUP_CLOSE)

    # ------------------------------------------------------------ statements

    def _indent_of(self, node: n.Node) -> str:
        ind = self.source.line_indent(node.span.start)
        _, col = self.source.line_col(node.span.start)
        # a statement sharing its line with earlier code sits one level deeper
        return ind if col == len(ind) + 1 else ind + INDENT

    def _touched(self, s: n.Stmt) -> bool:
        """True when some edit lands inside or on ``s``."""
        fp = self.fp
        for node in s.walk():
            nid = node.nid
            if nid in fp.lowered or nid in fp.exit_cleanups:
                return True
            if ("before", nid, 0) in fp.syncs or ("end", nid) in fp.syncs or ("after", nid) in fp.syncs:
                return True
            if fp.scope_cleanups.get(nid):
                return True
        return False

    def _emit_sub(self, s: n.Stmt) -> None:
        """A substatement of if/while/for; braced when it receives edits."""
        if not isinstance(s, n.Block) and self._touched(s):
            self.buf.insert_before(s.span, "{\n" + self._indent_of(s), WRAP_OPEN)
            self.buf.insert_after(s.span, "\n" + self._indent_of(s) + "}", WRAP_CLOSE)
            self.wrapped.add(s.nid)
        self._emit_stmt(s)
        end = self.fp.syncs.get(("end", s.nid))
        if end is not None and not isinstance(s, n.Block):
            self.buf.insert_after(s.span, "\n" + self._indent_of(s) + "#pragma omp taskwait", SYNC)

    def _sync_before(self, s: n.Stmt) -> None:
        if ("before", s.nid, 0) in self.fp.syncs:
            self.buf.insert_before(s.span, "#pragma omp taskwait\n" + self._indent_of(s), SYNC)

    def _emit_stmt(self, s: n.Stmt) -> None:
        fp = self.fp
        low = fp.lowered.get(s.nid)
        if low is not None:
            self.buf.replace(s.span, self._lowered_text(low, self._indent_of(s)), BODY)
            return
        self._sync_before(s)
        for t in fp.exit_cleanups.get(s.nid, []):
            ind = self._indent_of(s)
            self.buf.insert_before(s.span, self._task_text(t, ind) + "\n" + ind, CLEANUP)
        if isinstance(s, n.Block):
            for sub in s.stmts:
                self._emit_stmt(sub)
            self._block_end(s)
        elif isinstance(s, n.If):
            self._emit_sub(s.then)
            if s.else_ is not None:
                self._emit_sub(s.else_)
        elif isinstance(s, n.While):
            self._emit_sub(s.body)
        elif isinstance(s, n.For):
            self._emit_sub(s.body)
            if ("after", s.nid) in fp.syncs:
                self.buf.insert_after(s.span, "\n" + self._indent_of(s) + "#pragma omp taskwait", SYNC)
        elif isinstance(s, n.Switch):
            prev = None
            for sub in s.body.stmts:
                # a standalone directive is not a statement, so a label needs one before it
                if isinstance(prev, n.CaseLabel) and ("before", sub.nid, 0) in fp.syncs:
                    self.buf.insert_after(prev.span, " ;", SYNC)
                self._emit_stmt(sub)
                prev = sub
            self._block_end(s.body)

    def _block_end(self, b: n.Block) -> None:
        fp = self.fp
        ind = self.source.line_indent(b.close_span.start) + INDENT
        parts = []
        if ("end", b.nid) in fp.syncs:
            parts.append("#pragma omp taskwait")
        if parts:
            self.buf.insert_before(b.close_span, INDENT + _lines(parts, ind) + "\n" + ind[: -len(INDENT)], SYNC)
        if self.plan.options.promotion == "inline":
            lines = [self._delete_text(c) for c in fp.promoted.values() if c.var.scope == b.nid]
            if lines:
                self.buf.insert_before(b.close_span, INDENT + _lines(lines, ind) + "\n" + ind[: -len(INDENT)],
                                       CLEANUP)
        for t in fp.scope_cleanups.get(b.nid, []):
            self.buf.insert_before(b.close_span, INDENT + self._task_text(t, ind) + "\n" + ind[: -len(INDENT)],
                                   CLEANUP)

    # ------------------------------------------------------------ text

    def _lowered_text(self, low: LoweredStmt, ind: str) -> str:
        fp = self.fp
        s = low.stmt
        parts = []
        for k, st in enumerate(low.steps):
            if ("before", s.nid, k) in fp.syncs:
                parts.append("#pragma omp taskwait")
            if isinstance(st, DeclStep):
                parts.append(self._decl_text(st).replace("\n", "\n" + ind))
            elif isinstance(st, TaskStep):
                parts.append(self._task_text(st.task, ind))
            elif isinstance(st, ResidualStep):
                parts.extend(self._residual_text(st, ind))
        return _lines(parts, ind)

    def _decl_text(self, st: DeclStep) -> str:
        ty = st.type
        name = st.var.name
        cand = st.promotion
        if cand is None:
            init = f" = {st.init_text}" if st.init_text is not None else ""
            return f"{ty.spelling(name)}{init};"
        ptr = cand.ptr_name
        base = ty.without_ref()
        if base.is_array:
            bounds = "".join(f"[{d}]" for d in base.dims)
            head = ("const " if base.const else "") + base.base + "*" * base.ptr
            new_head = base.base + "*" * base.ptr
            init = f"{{{st.init_text}}}" if st.init_text is not None else ""
            return (
                f"{head} (*{ptr}){bounds} = new {new_head}[1]{bounds}{init};\n"
                f"{head} (&{name}){bounds} = *{ptr};"
            )
        plain = base.without_const()
        init = st.init_text if st.init_text is not None else ""
        if isinstance(st.init, n.InitList):
            alloc = f"new {plain.spelling()}{init}"
        else:
            alloc = f"new {plain.spelling()}({init})"
        return f"{plain.spelling()}* {ptr} = {alloc};\n{base.spelling()}& {name} = *{ptr};"

    def _delete_text(self, cand) -> str:
        op = "delete[]" if cand.var.type.is_array else "delete"
        return f"{op} {cand.ptr_name};"

    def _task_text(self, t: TaskPlan, ind: str) -> str:
        active = self.fp.activation_var
        clauses = list(t.depend.pragma_clauses())
        fp = list(t.firstprivate_names) + self.instr.firstprivate()
        if fp:
            clauses.append(f"firstprivate({', '.join(fp)})")
        clauses.append("default(shared)")
        cond = self.instr.if_clause(active)
        if cond:
            clauses.append(cond)
        body = self.instr.task_prologue() + [t.body_text] + self.instr.task_epilogue(active)
        lines = self.instr.before_task(active)
        lines.append("#pragma omp task " + " ".join(clauses))
        lines.append("{")
        lines.extend(INDENT + ln for ln in body)
        lines.append("}")
        return _lines(lines, ind)

    def _residual_text(self, st: ResidualStep, ind: str) -> list[str]:
        fp = self.fp
        s = st.stmt
        render = self.plan_render
        if isinstance(s, n.Return) and fp.return_mode is ReturnMode.GOTO:
            out = []
            if s.value is not None and fp.res_var:
                out.append(f"{fp.res_var} = {render(s.value, st.subst)};")
            elif s.value is not None:
                out.append(f"{render(s.value, st.subst)};")
            for t in fp.exit_cleanups.get(s.nid, []):
                out.append(self._task_text(t, ind))
            out.append(f"goto {fp.end_label};")
            return out
        return [render(s, st.subst)]

    def plan_render(self, node: n.Node, subst: dict) -> str:
        text = self.source.text
        start, end = node.span.start, node.span.end
        cuts = sorted(
            (x for x in node.walk() if x.nid in subst and x is not node),
            key=lambda c: (c.span.start, -c.span.end),
        )
        out = []
        pos = start
        for c in cuts:
            if c.span.start < pos:
                continue
            out.append(text[pos:c.span.start])
            out.append(subst[c.nid].name)
            pos = c.span.end
        out.append(text[pos:end])
        return "".join(out)


def _mark(text: str) -> str:
    return _PRAGMA.sub(lambda m: _OPEN + m.group(0) + _CLOSE, text)


def _own_lines(text: str) -> str:
    """Moves every generated directive onto a line of its own.

    A statement sharing its line with other code (``if (c) { f(x); }``)
    would otherwise get a pragma in mid-line, which the preprocessor
    ignores.
    """
    out = []
    for line in text.split("\n"):
        if _OPEN not in line:
            out.append(line)
            continue
        ind = line[: len(line) - len(line.lstrip(" \t"))]
        cur = ""
        for piece in _MARKED.split(line):
            if piece.startswith(_OPEN):
                if cur.strip():
                    out.append(cur.rstrip())
                    cur = ind
                out.append(cur + piece[1:-1])
                cur = None  # code after a directive restarts at the line's indent
            elif cur is None:
                cur = ind + piece.lstrip(" \t")
            else:
                cur += piece
        if cur and cur.strip():
            out.append(cur.rstrip())
    return "\n".join(out)


def transform_unit(tree: n.TranslationUnit, strategy=None, options: PlanOptions | None = None,
                   plan: UnitPlan | None = None) -> TransformResult:
    strategy = parse_strategy(strategy)
    if plan is None:
        plan = analyze(tree, Symbols(tree), options)
    t = Transformer(tree, plan, strategy)
    buf = t.run()
    marked = RewriteBuffer(buf.text)
    for e in buf.edits:
        marked.record(Edit(e.kind, e.anchor, _mark(e.text), e.phase))
    return TransformResult(_own_lines(marked.materialize()), plan, list(buf.edits), strategy, tree)


def transform_source(source, name: str = "<input>", strategy=None,
                     options: PlanOptions | None = None) -> TransformResult:
    """Parse, analyze and rewrite one translation unit."""
    tree = parse_translation_unit(source, name)
    return transform_unit(tree, strategy, options)

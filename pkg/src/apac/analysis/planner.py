"""Builds :class:`UnitPlan` objects from a parsed and resolved unit."""
from __future__ import annotations

import itertools
from typing import Iterable, Optional

from ..frontend import nodes as n
from ..frontend.errors import Diagnostic, UnsupportedConstruct
from ..frontend.lexer import tokenize
from ..frontend.symbols import (
    CallSiteInfo,
    ExistingVar,
    FreshDecl,
    FunctionInfo,
    Symbols,
    VarInfo,
    enumerate_call_sites,
)
from .access import AccessMode, DependClause, _Collector, classify_parameter
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

PURE_BUILTINS = frozenset(
    """
    sqrt fabs abs labs pow exp log log10 sin cos tan atan atan2 floor ceil fmin fmax min max
    std::sqrt std::fabs std::abs std::pow std::exp std::log std::sin std::cos std::tan
    std::atan2 std::floor std::ceil std::min std::max std::fmin std::fmax
    """.split()
)
WRITING_BUILTINS = frozenset({"std::swap", "swap"})
IO_BUILTINS = frozenset({"printf", "puts", "putchar", "std::printf", "std::puts"})


class NameAllocator:
    """Hands out ``apac_`` identifiers that collide with nothing in the unit."""

    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)

    def fresh(self, base: str) -> str:
        name = base
        k = 0
        while name in self.taken:
            k += 1
            name = f"{base}_{k}"
        self.taken.add(name)
        return name

    def child(self) -> "NameAllocator":
        return NameAllocator(self.taken)


def _calls(e: n.Node) -> Iterable[n.Call]:
    for node in e.walk():
        if isinstance(node, n.Call):
            yield node


class Planner:
    def __init__(self, tree: n.TranslationUnit, symbols: Symbols, options: PlanOptions | None = None):
        self.tree = tree
        self.syms = symbols
        self.options = options or PlanOptions()
        self.text = tree.source.text
        self.warnings: list[Diagnostic] = []
        idents = {t.text for t in tokenize(self.text) if t.kind == "ident"}
        self.names = NameAllocator(idents)
        self.sites: dict[int, CallSiteInfo] = {}
        self.sites_of: dict[int, list] = {}
        for f in symbols.functions:
            sites = enumerate_call_sites(f, symbols)
            self.sites_of[id(f)] = sites
            for s in sites:
                self.sites[s.call.nid] = s
        self.tainted = self._taint()

    # ------------------------------------------------------------ callees

    def _taint(self) -> set:
        """Functions that touch global state: globals, I/O or unknown externals."""
        reason: dict[int, str] = {}
        funcs = [f for f in self.syms.functions if f.node is not None and f.node.body is not None]
        callers: dict[int, list] = {}
        for f in funcs:
            for node in f.node.body.walk():
                if isinstance(node, n.Name):
                    v = self.syms.var_of.get(node.nid)
                    if v is not None and v.kind == "global" and id(f) not in reason:
                        reason[id(f)] = f"references global '{v.name}'"
            for s in self.sites_of[id(f)]:
                if s.callee is not None and not s.callee.is_external:
                    callers.setdefault(id(s.callee), []).append(f)
                    continue
                name = s.call.callee_name if not isinstance(s.call.func, n.Name) else s.call.func.name
                if name in PURE_BUILTINS or name in WRITING_BUILTINS:
                    continue
                if id(f) not in reason:
                    what = "performs I/O" if name in IO_BUILTINS else f"calls external '{name}'"
                    reason[id(f)] = what
        work = list(reason)
        by_id = {id(f): f for f in funcs}
        while work:
            fid = work.pop()
            for caller in callers.get(fid, []):
                if id(caller) not in reason:
                    reason[id(caller)] = f"calls '{by_id[fid].qualified_name}'"
                    work.append(id(caller))
        for f in funcs:
            if id(f) in reason and not f.is_main:
                self.warnings.append(
                    Diagnostic(
                        "warning",
                        f"'{f.qualified_name}' {reason[id(f)]}; calls to it are not taskified",
                        f.node.name_span,
                    )
                )
        return set(reason)

    def callee_taskifiable(self, f: Optional[FunctionInfo]) -> bool:
        return (
            f is not None
            and not f.is_external
            and not f.is_main
            and f.name not in self.options.exclude
            and f.qualified_name not in self.options.exclude
            and id(f) not in self.tainted
        )

    def site_taskifiable(self, s: CallSiteInfo) -> bool:
        if s.is_std_or_external or not self.callee_taskifiable(s.callee) or s.implicit_this:
            return False
        if len(s.args) != len(s.callee.params):
            return False
        for node in s.call.walk():
            if isinstance(node, n.This):
                return False
            if isinstance(node, n.Name):
                v = self.syms.var_of.get(node.nid)
                if v is not None and v.kind == "field":
                    return False
        if s.receiver is not None and not s.receiver.var_infos:
            return False
        return True

    # ------------------------------------------------------------ entry

    def plan(self) -> UnitPlan:
        unit_names = self.names
        plans = {}
        for f in self.syms.functions:
            if f.node is None or f.node.body is None:
                continue
            plans[f] = _FunctionPlanner(self, f, unit_names.child()).run()
        taskifiable = {id(f) for f in self.syms.functions if self.callee_taskifiable(f)}
        warnings = list(self.warnings)
        for p in plans.values():
            warnings.extend(p.warnings)
        return UnitPlan(plans, list(self.syms.functions), taskifiable, warnings, self.options, unit_names)

    # ------------------------------------------------------------ helpers

    def render(self, node: n.Node, subst: dict) -> str:
        """Source text of ``node`` with substituted calls replaced by temporaries."""
        start, end = node.span.start, node.span.end
        cuts = []
        for sub in node.walk():
            if sub.nid in subst and sub is not node:
                cuts.append(sub)
        cuts.sort(key=lambda c: (c.span.start, -c.span.end))
        out = []
        pos = start
        for c in cuts:
            if c.span.start < pos:
                continue  # nested inside an earlier cut
            out.append(self.text[pos:c.span.start])
            out.append(subst[c.nid].name)
            pos = c.span.end
        out.append(self.text[pos:end])
        return "".join(out)

    def call_kind(self, call: n.Call) -> str:
        """``task`` | ``user`` | ``pure`` | ``writes`` | ``io`` | ``unknown`` for inline evaluation."""
        s = self.sites.get(call.nid)
        if s is not None and s.callee is not None and not s.callee.is_external:
            return "user"
        name = call.func.name if isinstance(call.func, n.Name) else call.callee_name
        if name in PURE_BUILTINS:
            return "pure"
        if name in WRITING_BUILTINS:
            return "writes"
        if name in IO_BUILTINS:
            return "io"
        return "unknown"


# ---------------------------------------------------------------- accesses


class _Access:
    __slots__ = ("reads", "writes", "barrier")

    def __init__(self):
        self.reads: set = set()
        self.writes: set = set()
        self.barrier = False

    def merge(self, other: "_Access") -> "_Access":
        self.reads |= other.reads
        self.writes |= other.writes
        self.barrier = self.barrier or other.barrier
        return self


def _lvalue_base(e: n.Expr) -> Optional[n.Name]:
    while True:
        if isinstance(e, n.Name):
            return e
        if isinstance(e, n.Subscript):
            e = e.base
        elif isinstance(e, n.Member):
            e = e.obj
        elif isinstance(e, n.Unary) and e.op == "*":
            e = e.operand
        elif isinstance(e, (n.Cast,)):
            e = e.operand
        elif isinstance(e, n.Binary) and e.op in ("+", "-"):
            e = e.left
        else:
            return None


class _State:
    """Pending tasks since the last taskwait, summarized by root variables."""

    __slots__ = ("reads", "writes", "any")

    def __init__(self, reads=frozenset(), writes=frozenset(), any_=False):
        self.reads = frozenset(reads)
        self.writes = frozenset(writes)
        self.any = any_

    def __eq__(self, other):
        return (
            isinstance(other, _State)
            and self.reads == other.reads
            and self.writes == other.writes
            and self.any == other.any
        )

    def __hash__(self):
        return hash((self.reads, self.writes, self.any))

    def add_task(self, reads, writes) -> "_State":
        return _State(self.reads | reads, self.writes | writes, True)

    def drop(self, vars_) -> "_State":
        vs = frozenset(vars_)
        return _State(self.reads - vs, self.writes - vs, self.any)

    def conflicts(self, acc: _Access) -> bool:
        if not self.any:
            return False
        if acc.barrier:
            return True
        return bool(acc.writes & (self.reads | self.writes) or acc.reads & self.writes)


EMPTY = _State()


def _join(a: Optional[_State], b: Optional[_State]) -> Optional[_State]:
    if a is None:
        return b
    if b is None:
        return a
    return _State(a.reads | b.reads, a.writes | b.writes, a.any or b.any)


class _LoopCtx:
    def __init__(self, kind: str, body: n.Stmt):
        self.kind = kind  # loop | switch
        self.body = body
        self.breaks: Optional[_State] = None
        self.continues: list = []  # (stmt, state)


# ---------------------------------------------------------------- functions


class _FunctionPlanner:
    def __init__(self, up: Planner, func: FunctionInfo, names: NameAllocator):
        self.up = up
        self.syms = up.syms
        self.func = func
        self.fn = func.node
        self.names = names
        self.plan = FunctionPlan(func, needs_taskgroup=False)
        self.tmp_counter = itertools.count(1)
        self.scope_vars: dict[int, list] = {}
        self.parent: dict[int, n.Node] = {}
        self.block_depth: dict[int, int] = {}
        self.task_scope: dict[int, int] = {}  # id(TaskPlan) -> block nid holding the task
        self.step_of_task: dict[int, tuple] = {}
        self.exited: dict[int, list] = {}  # jump stmt nid -> blocks it leaves

    # ------------------------------------------------------------ driver

    def run(self) -> FunctionPlan:
        f = self.func
        sites = self.up.sites_of[id(f)]
        excluded = f.name in self.up.options.exclude or f.qualified_name in self.up.options.exclude
        if excluded or not any(self.up.callee_taskifiable(s.callee) and not s.is_std_or_external for s in sites):
            return self.plan
        self.plan.needs_taskgroup = True
        self.plan.activation_var = self.names.fresh("apac_active")
        self._index_tree()
        self._plan_returns()
        self._lower_block(self.fn.body)
        self._plan_promotions()
        self._flow_function()
        for t in self.plan.tasks:
            key = self.step_of_task.get(id(t))
            if key is not None and key in self.plan.syncs:
                t.preceded_by_taskwait = True
        return self.plan

    def _index_tree(self) -> None:
        body = self.fn.body

        def visit(node: n.Node, depth: int) -> None:
            for c in node.children():
                self.parent[c.nid] = node
                d = depth
                if isinstance(c, n.Block):
                    d = depth + 1
                    self.block_depth[c.nid] = d
                visit(c, d)

        self.block_depth[body.nid] = 1
        visit(body, 1)
        for v in self.syms.var_of.values():
            if v.kind == "local" and isinstance(v.decl, n.Declarator) and self._within(v.decl):
                lst = self.scope_vars.setdefault(v.scope, [])
                if v not in lst:
                    lst.append(v)

    def _within(self, node: n.Node) -> bool:
        b = self.fn.body.span
        return b.start <= node.span.start and node.span.end <= b.end and node.span.file_id == b.file_id

    # ------------------------------------------------------------ returns

    def _plan_returns(self) -> None:
        body = self.fn.body
        returns = [x for x in body.walk() if isinstance(x, n.Return)]
        p = self.plan
        if not returns:
            p.return_mode = ReturnMode.NONE
            return
        last = body.stmts[-1] if body.stmts else None
        if (
            len(returns) == 1
            and returns[0] is last
            and last.value is not None
            and not any(True for _ in _calls(last.value))
            and all(
                (v := self.syms.var_of.get(x.nid)) is None or v.kind in ("param", "global")
                for x in last.value.walk()
                if isinstance(x, n.Name)
            )
        ):
            p.return_mode = ReturnMode.TRAILING
            p.trailing_return = last
            return
        p.return_mode = ReturnMode.GOTO
        if not self.func.return_type.is_void:
            p.res_var = self.names.fresh("apac_res")
        label_base = self.fn.name if not self.fn.class_name else f"{self.fn.class_name}_{self.fn.name}"
        p.end_label = self.names.fresh(f"apac_endtaskgrouplabel_{label_base}")
        # a goto may not jump over an initialized declaration of the block
        # holding its label, so such blocks get an inner scope of their own
        first = min(r.span.start for r in returns)
        for s in body.stmts:
            if (
                isinstance(s, n.DeclStmt)
                and s.span.start > first
                and any(d.init is not None or d.type.ref or d.type.is_class for d in s.declarators)
            ):
                p.inner_block = True
                break

    # ------------------------------------------------------------ lowering

    def _lower_block(self, b: n.Block) -> None:
        for s in b.stmts:
            self._lower_stmt(s, b)

    def _lower_stmt(self, s: n.Stmt, block: n.Node) -> None:
        if s is self.plan.trailing_return:
            return
        if isinstance(s, n.Block):
            self._lower_block(s)
        elif isinstance(s, (n.ExprStmt, n.DeclStmt, n.Return)):
            lowered = self._lower_simple(s, block)
            if lowered is not None:
                self.plan.lowered[s.nid] = lowered
        elif isinstance(s, n.If):
            self._lower_stmt(s.then, s)
            if s.else_ is not None:
                self._lower_stmt(s.else_, s)
        elif isinstance(s, (n.While,)):
            self._lower_stmt(s.body, s)
        elif isinstance(s, n.For):
            self._lower_stmt(s.body, s)
        elif isinstance(s, n.Switch):
            self._lower_block(s.body)

    def _scope_of(self, node: n.Node) -> n.Node:
        p = self.parent.get(node.nid)
        while p is not None and not isinstance(p, n.Block):
            p = self.parent.get(p.nid)
        return p or self.fn.body

    def _hoist(self, e: n.Expr, top: Optional[n.Call]) -> tuple[list, dict, bool]:
        """Choose the calls of ``e`` moved into their own tasks.

        Returns (hoisted calls in evaluation order, subst, clean) where
        ``clean`` says that ``e`` keeps no inline call with unknown effects.
        """
        hoisted: list[n.Call] = []
        subst: dict = {}

        def visit(x: n.Node, conditional: bool) -> bool:
            # returns True when x contains no impure inline call after hoisting
            if isinstance(x, n.Binary) and x.op in ("&&", "||"):
                a = visit(x.left, conditional)
                b = visit(x.right, True)
                return a and b
            if isinstance(x, n.Conditional):
                a = visit(x.cond, conditional)
                b = visit(x.then, True)
                c = visit(x.else_, True)
                return a and b and c
            clean = True
            for c in x.children():
                clean = visit(c, conditional) and clean
            if isinstance(x, n.Call):
                site = self.up.sites.get(x.nid)
                kind = self.up.call_kind(x)
                if (
                    x is not top
                    and not conditional
                    and clean
                    and site is not None
                    and self.up.site_taskifiable(site)
                    and not site.callee.return_type.is_void
                    and not site.callee.return_type.is_class
                ):
                    hoisted.append(x)
                    subst[x.nid] = None  # temporary assigned below
                    return True
                if kind not in ("pure", "writes", "io"):
                    return False
            return clean

        clean = visit(e, False)
        return hoisted, subst, clean

    def _temp(self, call: n.Call, block: n.Node) -> VarInfo:
        site = self.up.sites[call.nid]
        ty = site.callee.return_type.without_ref().without_const()
        name = self.names.fresh(f"apac_tmp_{next(self.tmp_counter)}")
        depth = self.block_depth.get(block.nid, 1)
        v = VarInfo(name, ty, "local", None, block.nid, depth)
        self.plan.temps.append(v)
        self.scope_vars.setdefault(block.nid, []).append(v)
        return v

    def _hoisted_tasks(self, calls: list, subst: dict, block: n.Node) -> list:
        steps = []
        for c in calls:
            tmp = self._temp(c, block)
            inner = {k: v for k, v in subst.items() if v is not None}
            steps.append(DeclStep(tmp, tmp.type))
            body = f"{tmp.name} = {self.up.render(c, inner)};"
            task = self._call_task(self.up.sites[c.nid], c, inner, body, assign_var=tmp)
            steps.append(TaskStep(task))
            subst[c.nid] = tmp
        return steps

    def _lower_simple(self, s: n.Stmt, block: n.Node) -> Optional[LoweredStmt]:
        if isinstance(s, n.ExprStmt):
            return self._lower_expr_stmt(s, block)
        if isinstance(s, n.Return):
            steps = []
            subst: dict = {}
            if s.value is not None:
                calls, subst, _ = self._hoist(s.value, None)
                steps = self._hoisted_tasks(calls, subst, block)
            if self.plan.return_mode is ReturnMode.GOTO or steps:
                steps.append(ResidualStep(s, {k: v for k, v in subst.items() if v is not None}))
                return LoweredStmt(s, steps)
            return None
        return self._lower_decl(s, block)

    def _lower_expr_stmt(self, s: n.ExprStmt, block: n.Node) -> Optional[LoweredStmt]:
        e = s.expr
        top = None
        if isinstance(e, n.Call):
            top = e
        elif isinstance(e, n.Assign) and isinstance(e.value, n.Call) and not any(True for _ in _calls(e.target)):
            top = e.value
        calls, subst, _ = self._hoist(e, top)
        steps = self._hoisted_tasks(calls, subst, block)
        subst = {k: v for k, v in subst.items() if v is not None}
        if top is not None and self._top_ok(top, subst):
            site = self.up.sites[top.nid]
            body = self.up.render(s, subst)
            if top is e:
                task = self._call_task(site, top, subst, body)
            else:
                task = self._call_task(site, top, subst, body, assign_expr=e.target, assign_op=e.op)
            steps.append(TaskStep(task))
            return LoweredStmt(s, steps)
        if not steps:
            return None
        steps.append(ResidualStep(s, subst))
        return LoweredStmt(s, steps)

    def _top_ok(self, call: n.Call, subst: dict) -> bool:
        site = self.up.sites.get(call.nid)
        if site is None or not self.up.site_taskifiable(site):
            return False
        # no inline call with unknown effects may stay inside the task body
        for a in call.args:
            for c in _calls(a):
                if c.nid in subst:
                    continue
                if self.up.call_kind(c) not in ("pure",) and not self._under_subst(c, subst):
                    return False
        return True

    def _under_subst(self, c: n.Call, subst: dict) -> bool:
        p = self.parent.get(c.nid)
        while p is not None:
            if p.nid in subst:
                return True
            p = self.parent.get(p.nid)
        return False

    def _lower_decl(self, s: n.DeclStmt, block: n.Node) -> Optional[LoweredStmt]:
        if s.is_static:
            return None  # initialized once; its calls run inline
        steps = []
        changed = False
        for d in s.declarators:
            var = self.syms.var_of[d.nid]
            init = d.init
            if init is None:
                steps.append(DeclStep(var, d.type))
                continue
            top = init if isinstance(init, n.Call) else None
            calls, subst, _ = self._hoist(init, top)
            hoisted = self._hoisted_tasks(calls, subst, block)
            subst = {k: v for k, v in subst.items() if v is not None}
            steps.extend(hoisted)
            changed = changed or bool(hoisted)
            if top is not None and self._top_ok(top, subst) and not s.is_static:
                if d.type.ref:
                    raise UnsupportedConstruct(d.span, "reference initialized by a taskified call")
                if d.type.is_array or d.type.is_class:
                    steps.append(DeclStep(var, d.type, init, subst, self.up.render(init, subst)))
                    continue
                steps.append(DeclStep(var, d.type.without_const()))
                body = f"{d.name} = {self.up.render(top, subst)};"
                site = self.up.sites[top.nid]
                steps.append(TaskStep(self._call_task(site, top, subst, body, assign_var=var)))
                changed = True
            else:
                steps.append(DeclStep(var, d.type, init, subst, self.up.render(init, subst)))
        lowered = LoweredStmt(s, steps)
        if not changed:
            # kept aside: promotion may still need to rewrite the declaration
            self._plain_decls = getattr(self, "_plain_decls", {})
            self._plain_decls[s.nid] = lowered
            return None
        return lowered

    # ------------------------------------------------------------ depend sets

    def _expr_vars(self, e: n.Expr, subst: dict, in_index: bool = False, acc=None, idx=None):
        acc = [] if acc is None else acc
        idx = [] if idx is None else idx
        if e.nid in subst:
            (idx if in_index else acc).append(subst[e.nid])
            return acc, idx
        if isinstance(e, n.Name):
            v = self.syms.var_of.get(e.nid)
            if v is not None:
                (idx if in_index else acc).append(v)
            return acc, idx
        if isinstance(e, n.Subscript):
            self._expr_vars(e.base, subst, in_index, acc, idx)
            self._expr_vars(e.index, subst, True, acc, idx)
            return acc, idx
        if isinstance(e, n.Call):
            if isinstance(e.func, n.Member):
                self._expr_vars(e.func.obj, subst, in_index, acc, idx)
            for a in e.args:
                self._expr_vars(a, subst, in_index, acc, idx)
            return acc, idx
        for c in e.children():
            self._expr_vars(c, subst, in_index, acc, idx)
        return acc, idx

    def _call_task(
        self,
        site: CallSiteInfo,
        call: n.Call,
        subst: dict,
        body: str,
        assign_var: Optional[VarInfo] = None,
        assign_expr: Optional[n.Expr] = None,
        assign_op: str = "=",
    ) -> TaskPlan:
        callee = site.callee
        col = _Collector()
        for arg, param in zip(call.args, callee.params):
            vs, ix = self._expr_vars(arg, subst)
            col.add_all(vs, classify_parameter(param))
            col.add_all(ix, AccessMode.IN)
        if isinstance(call.func, n.Member):
            vs, ix = self._expr_vars(call.func.obj, subst)
            col.add_all(vs, AccessMode.IN if callee.is_const_method else AccessMode.INOUT)
            col.add_all(ix, AccessMode.IN)
        if assign_var is not None:
            col.add(assign_var, AccessMode.INOUT)
        if assign_expr is not None:
            vs, ix = self._expr_vars(assign_expr, subst)
            col.add_all(vs, AccessMode.INOUT)
            col.add_all(ix, AccessMode.IN)
        # a pointer alias names its target too, so tasks reaching the target
        # directly are ordered with tasks going through the alias
        for v in list(col.order):
            if v.alias_of is not None and not v.type.ref and v.type.ptr:
                root = v.root
                if self._visible(root):
                    col.add(root, col.modes[id(v)])
        ins, outs = col.split()
        clause = DependClause(tuple(v.name for v in ins), tuple(v.name for v in outs))
        fp = tuple(
            v for v in col.order if v.alias_of is not None and not v.type.ref and v.type.ptr and v.depth >= 2
        )
        line = self.up.tree.source.line_col(call.span.start)[0]
        task = TaskPlan(
            kind="call",
            depend=clause,
            ins=ins,
            inouts=outs,
            firstprivate=fp,
            site=site,
            call=call,
            subst=dict(subst),
            assign_var=assign_var,
            assign_expr=assign_expr,
            assign_op=assign_op,
            body_text=body,
            label=f"{callee.name}@{line}",
        )
        self.plan.tasks.append(task)
        return task

    def _visible(self, v: VarInfo) -> bool:
        return v.kind in ("param", "local", "global")

    # ------------------------------------------------------------ promotion

    def _tasks_by_block(self) -> dict:
        out: dict[int, list] = {}
        for nid, low in self.plan.lowered.items():
            for st in low.steps:
                if isinstance(st, TaskStep):
                    blk = self._scope_of(low.stmt)
                    out.setdefault(blk.nid, []).append(st.task)
        return out

    def _plan_promotions(self) -> None:
        p = self.plan
        opts = self.up.options
        by_block = self._tasks_by_block()

        def tasks_under(block_nid: int) -> list:
            res = []
            for bid, ts in by_block.items():
                node = bid
                while node is not None:
                    if node == block_nid:
                        res.extend(ts)
                        break
                    par = self.parent.get(node)
                    node = None
                    while par is not None:
                        if isinstance(par, n.Block):
                            node = par.nid
                            break
                        par = self.parent.get(par.nid)
            return res

        plain = getattr(self, "_plain_decls", {})
        for bid, vars_ in self.scope_vars.items():
            depth = self.block_depth.get(bid)
            if depth is None or depth < 2:
                continue
            blk = self._node(bid)
            if blk is None or not isinstance(blk, n.Block):
                continue
            in_switch = isinstance(self.parent.get(bid), n.Switch)
            used: set = set()
            for t in tasks_under(bid):
                used.update(id(v) for v in t.ins + t.inouts + t.firstprivate)
            for v in vars_:
                if id(v) not in used or v.for_init:
                    continue
                decl_stmt = self.parent.get(v.decl.nid) if v.decl is not None else None
                if isinstance(decl_stmt, n.DeclStmt) and decl_stmt.is_static:
                    continue
                is_alias = v.type.ref or (v.alias_of is not None and v.type.ptr > 0)
                span = v.decl.span if v.decl is not None else blk.span
                cand = PromotionCandidate(v, span, blk.close_span, is_alias)
                if in_switch and not is_alias:
                    continue
                p.promotions.append(cand)
                if is_alias or opts.promotion == "none":
                    continue
                cand.ptr_name = self.names.fresh(f"apac_ptr_{v.name}")
                p.promoted[id(v)] = cand
                if v.decl is not None and decl_stmt is not None and decl_stmt.nid not in p.lowered:
                    p.lowered[decl_stmt.nid] = plain[decl_stmt.nid]
        for low in p.lowered.values():
            for st in low.steps:
                if isinstance(st, DeclStep) and id(st.var) in p.promoted:
                    st.promotion = p.promoted[id(st.var)]
        if opts.promotion == "task":
            for cand in p.promoted.values():
                p.scope_cleanups.setdefault(cand.var.scope, []).append(self._cleanup_task(cand))
        self._plan_exit_cleanups()

    def _node(self, nid: int) -> Optional[n.Node]:
        if nid == self.fn.body.nid:
            return self.fn.body
        for node in self.fn.body.walk():
            if node.nid == nid:
                return node
        return None

    def _cleanup_task(self, cand: PromotionCandidate) -> TaskPlan:
        v = cand.var
        op = "delete[]" if v.type.is_array else "delete"
        return TaskPlan(
            kind="cleanup",
            depend=DependClause((), (v.name,)),
            ins=(),
            inouts=(v,),
            cleanup=cand,
            body_text=f"{op} {cand.ptr_name};",
            label=f"delete {v.name}",
        )

    def _plan_exit_cleanups(self) -> None:
        p = self.plan
        body = self.fn.body
        for node in body.walk():
            if not isinstance(node, (n.Break, n.Continue, n.Return)):
                continue
            exited = []
            par = self.parent.get(node.nid)
            while par is not None and par is not body:
                if isinstance(par, n.Block):
                    exited.append(par)
                if isinstance(node, (n.Break, n.Continue)) and isinstance(par, (n.While, n.For, n.Switch)):
                    if isinstance(node, n.Continue) and isinstance(par, n.Switch):
                        par = self.parent.get(par.nid)
                        continue
                    break
                par = self.parent.get(par.nid)
            self.exited[node.nid] = exited
            tasks = []
            for blk in exited:
                for v in self.scope_vars.get(blk.nid, []):
                    cand = p.promoted.get(id(v))
                    if (
                        cand is not None
                        and cand.decl_span.start < node.span.start
                        and self.up.options.promotion == "task"
                    ):
                        tasks.append(self._cleanup_task(cand))
            if tasks:
                p.exit_cleanups[node.nid] = tasks

    # ------------------------------------------------------------ dataflow

    def _add_sync(self, key: tuple, span, reason: SyncReason) -> bool:
        if key in self.up.options.suppress_syncs:
            return False
        existing = self.plan.syncs.get(key)
        if existing is None:
            self.plan.syncs[key] = SyncPoint(span, reason, key)
        elif reason is SyncReason.RETURN_BARRIER:
            existing.reason = reason
        return True

    def _roots(self, vs) -> frozenset:
        return frozenset(v.root for v in vs)

    def _expr_access(self, e: Optional[n.Node], subst: dict, acc: Optional[_Access] = None) -> _Access:
        acc = acc or _Access()
        if e is None:
            return acc
        if e.nid in subst:
            acc.reads.add(subst[e.nid].root)
            return acc
        if isinstance(e, n.Name):
            v = self.syms.var_of.get(e.nid)
            if v is not None:
                acc.reads.add(v.root)
            return acc
        if isinstance(e, n.Assign):
            self._write_target(e.target, acc)
            self._expr_access(e.target, subst, acc)
            self._expr_access(e.value, subst, acc)
            return acc
        if isinstance(e, (n.Unary, n.Postfix)) and e.op in ("++", "--", "&"):
            self._write_target(e.operand, acc)
            self._expr_access(e.operand, subst, acc)
            return acc
        if isinstance(e, n.Delete):
            self._write_target(e.operand, acc)
            self._expr_access(e.operand, subst, acc)
            return acc
        if isinstance(e, n.Call):
            kind = self.up.call_kind(e)
            if isinstance(e.func, n.Member):
                self._expr_access(e.func.obj, subst, acc)
                acc.barrier = True
            if kind == "writes":
                for a in e.args:
                    self._write_target(a, acc)
            elif kind not in ("pure", "io"):
                acc.barrier = True
            for a in e.args:
                self._expr_access(a, subst, acc)
            return acc
        for c in e.children():
            self._expr_access(c, subst, acc)
        return acc

    def _write_target(self, target: n.Expr, acc: _Access) -> None:
        base = _lvalue_base(target)
        if base is None:
            acc.barrier = True
            return
        v = self.syms.var_of.get(base.nid)
        if v is not None:
            acc.writes.add(v.root)

    def _stmt_access(self, s: n.Stmt, subst: dict) -> _Access:
        acc = _Access()
        if isinstance(s, n.ExprStmt):
            self._expr_access(s.expr, subst, acc)
        elif isinstance(s, n.DeclStmt):
            for d in s.declarators:
                self._expr_access(d.init, subst, acc)
                acc.writes.add(self.syms.var_of[d.nid].root)
        elif isinstance(s, n.Return):
            self._expr_access(s.value, subst, acc)
        return acc

    def _flow_function(self) -> None:
        self.loops: list[_LoopCtx] = []
        body = self.fn.body
        state = EMPTY
        for s in body.stmts:
            if s is self.plan.trailing_return:
                continue
            state = self._flow(s, state)

    def _check(self, state: Optional[_State], acc: _Access, key, span, reason=SyncReason.COHERENCY):
        if state is None:
            return None
        if state.conflicts(acc) and self._add_sync(key, span, reason):
            return EMPTY
        return state

    def _flow_block(self, b: n.Block, state: Optional[_State]) -> Optional[_State]:
        for s in b.stmts:
            state = self._flow(s, state)
        return self._scope_exit(b, state)

    def _scope_exit(self, scope: n.Node, state: Optional[_State]) -> Optional[_State]:
        vars_ = self.scope_vars.get(scope.nid, [])
        if state is None or not vars_:
            return state if state is None else state.drop(vars_)
        candidates = {id(c.var) for c in self.plan.promotions}
        exposed = [
            v for v in vars_
            if id(v) not in candidates and not v.type.ref and (v in state.reads or v in state.writes)
        ]
        if exposed:
            key = ("after", scope.nid) if isinstance(scope, n.For) else ("end", scope.nid)
            span = scope.span if isinstance(scope, n.For) else (getattr(scope, "close_span", None) or scope.span)
            if self._add_sync(key, span, SyncReason.COHERENCY):
                state = EMPTY
        if self.up.options.promotion == "task":
            for t in self.plan.scope_cleanups.get(scope.nid, []):
                state = state.add_task(frozenset(), self._roots(t.inouts))
        return state.drop(vars_)

    def _flow_sub(self, s: n.Stmt, state: Optional[_State]) -> Optional[_State]:
        """A substatement that opens its own scope."""
        if isinstance(s, n.Block):
            return self._flow_block(s, state)
        out = self._flow(s, state)
        return self._scope_exit(s, out)

    def _flow(self, s: n.Stmt, state: Optional[_State]) -> Optional[_State]:
        if state is None:
            return None
        span = s.span
        if isinstance(s, n.Block):
            return self._flow_block(s, state)
        low = self.plan.lowered.get(s.nid)
        if low is not None:
            return self._flow_lowered(low, state)
        if isinstance(s, (n.ExprStmt, n.DeclStmt)):
            return self._check(state, self._stmt_access(s, {}), ("before", s.nid, 0), span)
        if isinstance(s, n.Return):
            # returns outside the goto rewrite only exist without a taskgroup
            return None
        if isinstance(s, n.If):
            state = self._check(state, self._expr_access(s.cond, {}), ("before", s.nid, 0), span)
            a = self._flow_sub(s.then, state)
            b = self._flow_sub(s.else_, state) if s.else_ is not None else state
            return _join(a, b)
        if isinstance(s, n.While):
            cond = self._expr_access(s.cond, {})
            state = self._check(state, cond, ("before", s.nid, 0), span)
            return self._flow_loop(s, s.body, state, cond)
        if isinstance(s, n.For):
            entry = _Access()
            if s.init is not None:
                entry.merge(self._stmt_access(s.init, {}))
            entry.merge(self._expr_access(s.cond, {}))
            state = self._check(state, entry, ("before", s.nid, 0), span)
            back = self._expr_access(s.incr, {})
            back.merge(self._expr_access(s.cond, {}))
            out = self._flow_loop(s, s.body, state, back)
            return self._scope_exit(s, out)
        if isinstance(s, n.Switch):
            state = self._check(state, self._expr_access(s.cond, {}), ("before", s.nid, 0), span)
            ctx = _LoopCtx("switch", s.body)
            self.loops.append(ctx)
            cur: Optional[_State] = None
            has_default = False
            for sub in s.body.stmts:
                if isinstance(sub, n.CaseLabel):
                    has_default = has_default or sub.value is None
                    cur = _join(cur, state)
                    continue
                cur = self._flow(sub, cur)
            self.loops.pop()
            cur = self._scope_exit(s.body, cur)
            out = _join(cur, ctx.breaks)
            if not has_default:
                out = _join(out, state)
            return out
        if isinstance(s, n.Break):
            ctx = self.loops[-1] if self.loops else None
            state = self._exit_jump(s, state)
            if ctx is not None:
                ctx.breaks = _join(ctx.breaks, state)
            return None
        if isinstance(s, n.Continue):
            ctx = next((c for c in reversed(self.loops) if c.kind == "loop"), None)
            state = self._exit_jump(s, state)
            if ctx is not None:
                ctx.continues.append((s, state))
            return None
        return state

    def _exit_jump(self, s: n.Stmt, state: _State) -> _State:
        for t in self.plan.exit_cleanups.get(s.nid, []):
            state = state.add_task(frozenset(), self._roots(t.inouts))
        for blk in self.exited.get(s.nid, ()):
            state = state.drop(self.scope_vars.get(blk.nid, []))
        return state

    def _flow_loop(self, loop: n.Stmt, body: n.Stmt, entry: Optional[_State], back: _Access):
        if entry is None:
            return None
        head = entry
        for _ in range(64):
            ctx = _LoopCtx("loop", body)
            self.loops.append(ctx)
            out = self._flow_sub(body, head)
            self.loops.pop()
            if out is not None and out.conflicts(back):
                if self._add_sync(("end", body.nid), getattr(body, "close_span", None) or body.span,
                                  SyncReason.COHERENCY):
                    out = EMPTY
            merged = out
            for stmt, st in ctx.continues:
                if st is not None and st.conflicts(back):
                    if self._add_sync(("before", stmt.nid, 0), stmt.span, SyncReason.COHERENCY):
                        st = EMPTY
                merged = _join(merged, st)
            new_head = _join(entry, merged)
            if new_head == head:
                return _join(head, ctx.breaks)
            head = new_head
        raise RuntimeError("coherency analysis did not converge")

    def _flow_lowered(self, low: LoweredStmt, state: _State) -> Optional[_State]:
        s = low.stmt
        for k, st in enumerate(low.steps):
            key = ("before", s.nid, k)
            if isinstance(st, DeclStep):
                acc = self._expr_access(st.init, st.subst)
                acc.writes.add(st.var.root)
                state = self._check(state, acc, key, s.span)
            elif isinstance(st, TaskStep):
                t = st.task
                self.step_of_task[id(t)] = key
                idx = _Access()
                for a in (t.call.args if t.call is not None else ()):
                    _, ix = self._expr_vars(a, t.subst)
                    idx.reads.update(v.root for v in ix)
                if state.any and idx.reads & state.writes:
                    if self._add_sync(key, s.span, SyncReason.INDEX_DEPENDENCY):
                        state = EMPTY
                fp = _Access()
                fp.reads.update(v.root for v in t.firstprivate)
                state = self._check(state, fp, key, s.span)
                state = state.add_task(self._roots(t.ins), self._roots(t.inouts))
            elif isinstance(st, ResidualStep):
                if isinstance(s, n.Return):
                    if self.plan.return_mode is ReturnMode.GOTO:
                        if self._add_sync(key, s.span, SyncReason.RETURN_BARRIER):
                            state = EMPTY
                        self._exit_jump(s, state)
                        return None
                    state = self._check(state, self._expr_access(s.value, st.subst), key, s.span)
                    return None
                state = self._check(state, self._stmt_access(s, st.subst), key, s.span)
        return state


def analyze(tree: n.TranslationUnit, symbols: Symbols | None = None, options: PlanOptions | None = None) -> UnitPlan:
    """Plan the transformation of a whole unit."""
    symbols = symbols or Symbols(tree)
    return Planner(tree, symbols, options).plan()

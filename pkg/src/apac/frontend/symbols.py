"""Function tables, call-site tables and lexical name resolution."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from . import nodes as n
from .errors import Diagnostic, ResolutionError, UnsupportedConstruct
from .source import SourceSpan


class DeclaratorKind(enum.Enum):
    BY_VALUE = "ByValue"
    REFERENCE = "Reference"
    POINTER = "Pointer"


@dataclass(frozen=True)
class ParamInfo:
    name: str
    base_type: str
    declarator: DeclaratorKind
    is_const_qualified: bool
    type: Optional[n.TypeRef] = None

    @classmethod
    def from_param(cls, p: n.Param) -> "ParamInfo":
        ty = p.type
        if ty.ref:
            kind = DeclaratorKind.REFERENCE
        elif ty.ptr or ty.dims:
            kind = DeclaratorKind.POINTER
        else:
            kind = DeclaratorKind.BY_VALUE
        return cls(p.name, ty.base, kind, ty.const, ty)


@dataclass(eq=False)
class FunctionInfo:
    name: str
    qualified_name: str
    params: list
    return_type: n.TypeRef
    body_span: Optional[SourceSpan]
    is_method: bool
    is_const_method: bool
    is_main: bool
    is_external: bool
    class_name: Optional[str] = None
    node: Optional[n.FunctionDef] = field(default=None, repr=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def key(self) -> tuple:
        return (self.qualified_name, self.arity)


# ------------------------------------------------------------------ variables


@dataclass(eq=False)
class VarInfo:
    """A declared variable. ``scope`` is the nid of the declaring block (0 for globals)."""

    name: str
    type: n.TypeRef
    kind: str  # param | local | global | field
    decl: Optional[n.Node]
    scope: int
    depth: int
    for_init: bool = False
    alias_of: Optional["VarInfo"] = None

    @property
    def root(self) -> "VarInfo":
        v = self
        seen = set()
        while v.alias_of is not None and id(v) not in seen:
            seen.add(id(v))
            v = v.alias_of
        return v

    def __repr__(self) -> str:
        return f"VarInfo({self.name!r}, {self.kind}, scope={self.scope})"


# ------------------------------------------------------------------ call sites


@dataclass(frozen=True)
class ExistingVar:
    name: str
    target: n.Expr = field(compare=False, repr=False, default=None)
    op: str = "="


@dataclass(frozen=True)
class FreshDecl:
    name: str
    is_const: bool
    declarator: n.Declarator = field(compare=False, repr=False, default=None)


ResultBinding = Union[None, ExistingVar, FreshDecl]


@dataclass(eq=False)
class ArgInfo:
    expr: n.Expr
    var_infos: tuple  # VarInfo roots referenced outside subscript indices
    index_infos: tuple  # VarInfo referenced inside subscript indices

    @property
    def vars(self) -> tuple:
        return tuple(v.name for v in self.var_infos)

    @property
    def index_vars(self) -> tuple:
        return tuple(v.name for v in self.index_infos)


@dataclass(eq=False)
class CallSiteInfo:
    callee: Optional[FunctionInfo]
    call: n.Call
    stmt: n.Stmt
    stmt_span: SourceSpan
    args: list
    result_binding: ResultBinding
    enclosing_scopes: tuple
    is_std_or_external: bool
    receiver: Optional[ArgInfo] = None  # object of a method call
    implicit_this: bool = False
    # variables written / read-as-index by the result binding
    binding_vars: Optional[tuple] = None

    @property
    def name(self) -> str:
        return self.call.callee_name


# ------------------------------------------------------------------ tables


def _function_info(fn: n.FunctionDef) -> FunctionInfo:
    return FunctionInfo(
        name=fn.name,
        qualified_name=fn.qualified_name,
        params=[ParamInfo.from_param(p) for p in fn.params],
        return_type=fn.return_type,
        body_span=fn.body.span if fn.body is not None else None,
        is_method=fn.class_name is not None,
        is_const_method=fn.is_const_method,
        is_main=fn.class_name is None and fn.name == "main",
        is_external=fn.body is None,
        class_name=fn.class_name,
        node=fn,
    )


def enumerate_functions(tree: n.TranslationUnit) -> list[FunctionInfo]:
    """Functions of the unit in source order.

    A prototype followed by its definition yields one entry, placed at the
    prototype's position and describing the definition.
    """
    out: list[FunctionInfo] = []
    index: dict[tuple, int] = {}
    for fn in tree.functions:
        info = _function_info(fn)
        if info.key in index:
            prev = out[index[info.key]]
            if prev.is_external:
                if not info.is_external:
                    out[index[info.key]] = info
                continue
            if info.is_external:
                continue
            # two bodies under one name and arity: kept, reported on lookup
        index[info.key] = len(out)
        out.append(info)
    return out


class Symbols:
    """Name and call resolution for one translation unit."""

    def __init__(self, tree: n.TranslationUnit):
        self.tree = tree
        self.functions = enumerate_functions(tree)
        self.classes: dict[str, n.ClassDef] = {
            it.name: it for it in tree.items if isinstance(it, n.ClassDef)
        }
        self.globals: dict[str, VarInfo] = {}
        self.var_of: dict[int, VarInfo] = {}  # Name/Declarator/Param nid -> VarInfo
        self.callee_of: dict[int, Optional[FunctionInfo]] = {}
        self.diagnostics: list[Diagnostic] = []
        self._by_name: dict[str, list[FunctionInfo]] = {}
        for f in self.functions:
            self._by_name.setdefault(f.qualified_name, []).append(f)
        self.info_of_node: dict[int, FunctionInfo] = {}
        for fn in tree.functions:
            key = (fn.qualified_name, len(fn.params))
            for f in self.functions:
                if f.key == key:
                    self.info_of_node[fn.nid] = f
        for item in tree.items:
            if isinstance(item, n.DeclStmt):
                for d in item.declarators:
                    v = VarInfo(d.name, d.type, "global", d, 0, 0)
                    self.globals[d.name] = v
                    self.var_of[d.nid] = v
        for f in self.functions:
            if f.node is not None and f.node.body is not None:
                _Resolver(self, f).run()

    # -------------------------------------------------------------- lookup

    def lookup_function(self, name: str, arity: int, class_name: Optional[str] = None):
        """Resolve by name and arity. Returns None for unknown callees."""
        if class_name is not None:
            cands = [f for f in self._by_name.get(f"{class_name}::{name}", []) if f.arity == arity]
        else:
            cands = [f for f in self._by_name.get(name, []) if f.arity == arity]
        if len(cands) > 1:
            raise ResolutionError(cands[1].node.name_span, f"ambiguous function '{name}'")
        return cands[0] if cands else None

    def function(self, name: str) -> FunctionInfo:
        for f in self.functions:
            if f.qualified_name == name or f.name == name:
                return f
        raise KeyError(name)

    def field_type(self, class_name: str, fname: str) -> Optional[n.TypeRef]:
        cls = self.classes.get(class_name)
        if cls is None:
            return None
        for d in cls.fields:
            if d.name == fname:
                return d.type
        return None

    def vars_in(self, expr: n.Node) -> Iterator[VarInfo]:
        for node in expr.walk():
            if isinstance(node, n.Name) and node.nid in self.var_of:
                yield self.var_of[node.nid]


class _Resolver:
    def __init__(self, syms: Symbols, func: FunctionInfo):
        self.syms = syms
        self.func = func
        self.fn = func.node
        self.scopes: list[dict[str, VarInfo]] = []
        self.scope_ids: list[int] = []

    def run(self) -> None:
        fn = self.fn
        params = {}
        for p in fn.params:
            if p.name:
                if p.name in params:
                    raise ResolutionError(p.span, f"duplicate parameter '{p.name}'")
                v = VarInfo(p.name, p.type, "param", p, fn.nid, 0)
                params[p.name] = v
                self.syms.var_of[p.nid] = v
        self.scopes.append(params)
        self.scope_ids.append(fn.nid)
        self.block(fn.body)

    # scopes
    def push(self, sid: int) -> None:
        self.scopes.append({})
        self.scope_ids.append(sid)

    def pop(self) -> None:
        self.scopes.pop()
        self.scope_ids.pop()

    def lookup(self, name: str) -> Optional[VarInfo]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        if self.fn.class_name is not None:
            ty = self.syms.field_type(self.fn.class_name, name)
            if ty is not None:
                return VarInfo(name, ty, "field", None, 0, 0)
        return self.syms.globals.get(name)

    def declare(self, d: n.Declarator, for_init: bool = False) -> None:
        if d.init is not None:
            self.expr(d.init)
        alias = None
        init = d.init
        if d.type.ref and isinstance(init, n.Name):
            alias = self.syms.var_of.get(init.nid)
        elif d.type.ref and init is not None and not isinstance(init, n.Call):
            alias = _lvalue_root(init, self.syms)
        elif d.type.ptr and isinstance(init, n.Unary) and init.op == "&":
            alias = _lvalue_root(init.operand, self.syms)
        v = VarInfo(
            d.name, d.type, "local", d, self.scope_ids[-1], len(self.scopes) - 1, for_init, alias
        )
        self.scopes[-1][d.name] = v
        self.syms.var_of[d.nid] = v

    # statements
    def block(self, b: n.Block) -> None:
        self.push(b.nid)
        for s in b.stmts:
            self.stmt(s)
        self.pop()

    def sub(self, s: n.Stmt) -> None:
        # a non-block substatement still opens its own scope
        if isinstance(s, n.Block):
            self.block(s)
        else:
            self.push(s.nid)
            self.stmt(s)
            self.pop()

    def stmt(self, s: n.Stmt) -> None:
        if isinstance(s, n.Block):
            self.block(s)
        elif isinstance(s, n.DeclStmt):
            for d in s.declarators:
                self.declare(d)
        elif isinstance(s, n.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, n.If):
            self.expr(s.cond)
            self.sub(s.then)
            if s.else_ is not None:
                self.sub(s.else_)
        elif isinstance(s, n.While):
            self.expr(s.cond)
            self.sub(s.body)
        elif isinstance(s, n.For):
            self.push(s.nid)
            if isinstance(s.init, n.DeclStmt):
                for d in s.init.declarators:
                    self.declare(d, for_init=True)
            elif s.init is not None:
                self.stmt(s.init)
            if s.cond is not None:
                self.expr(s.cond)
            if s.incr is not None:
                self.expr(s.incr)
            self.sub(s.body)
            self.pop()
        elif isinstance(s, n.Switch):
            self.expr(s.cond)
            self.block(s.body)
        elif isinstance(s, n.CaseLabel):
            if s.value is not None:
                self.expr(s.value)
        elif isinstance(s, n.Return):
            if s.value is not None:
                self.expr(s.value)

    # expressions
    def expr(self, e: n.Expr) -> None:
        if isinstance(e, n.Name):
            v = self.lookup(e.name)
            if v is None:
                if e.is_qualified:
                    return
                raise ResolutionError(e.span, f"undeclared identifier '{e.name}'")
            self.syms.var_of[e.nid] = v
            return
        if isinstance(e, n.Call):
            self.call(e)
            return
        for c in e.children():
            self.expr(c)

    def call(self, c: n.Call) -> None:
        for a in c.args:
            self.expr(a)
        func = c.func
        callee = None
        if isinstance(func, n.Member):
            self.expr(func.obj)
            cls = self._class_of(func.obj, func.arrow)
            if cls is not None:
                callee = self.syms.lookup_function(func.name, len(c.args), cls)
        else:
            name = func.name
            if self.fn.class_name is not None and not func.is_qualified:
                callee = self.syms.lookup_function(name, len(c.args), self.fn.class_name)
            if callee is None and not name.startswith("std::"):
                callee = self.syms.lookup_function(name, len(c.args))
            if callee is None and not func.is_qualified and self.lookup(name) is not None:
                raise UnsupportedConstruct(c.span, "call through variable")
        self.syms.callee_of[c.nid] = callee

    def _class_of(self, obj: n.Expr, arrow: bool) -> Optional[str]:
        ty = self._type_of(obj)
        if ty is None:
            return None
        if arrow:
            ty = ty.element()
        return ty.base if ty.is_class else None

    def _type_of(self, e: n.Expr) -> Optional[n.TypeRef]:
        if isinstance(e, n.Name):
            v = self.syms.var_of.get(e.nid)
            return v.type.without_ref() if v else None
        if isinstance(e, n.Subscript):
            t = self._type_of(e.base)
            return t.element() if t else None
        if isinstance(e, n.Unary) and e.op == "*":
            t = self._type_of(e.operand)
            return t.element() if t else None
        if isinstance(e, n.Member):
            cls = self._class_of(e.obj, e.arrow)
            return self.syms.field_type(cls, e.name) if cls else None
        if isinstance(e, n.This):
            return n.TypeRef(self.fn.class_name, self.fn.is_const_method, 1)
        return None


def _lvalue_root(e: n.Expr, syms: Symbols) -> Optional[VarInfo]:
    """Variable an lvalue expression designates storage of (``a`` for ``a[i].x``)."""
    while True:
        if isinstance(e, n.Name):
            return syms.var_of.get(e.nid)
        if isinstance(e, n.Subscript):
            e = e.base
        elif isinstance(e, n.Member) and not e.arrow:
            e = e.obj
        else:
            return None


# ------------------------------------------------------------------ call sites


def _index_names(e: n.Expr, syms: Symbols, acc: list, idx: list, in_index: bool = False) -> None:
    if isinstance(e, n.Name):
        v = syms.var_of.get(e.nid)
        if v is not None:
            (idx if in_index else acc).append(v)
        return
    if isinstance(e, n.Subscript):
        _index_names(e.base, syms, acc, idx, in_index)
        _index_names(e.index, syms, acc, idx, True)
        return
    if isinstance(e, n.Call):
        for a in e.args:
            _index_names(a, syms, acc, idx, in_index)
        if isinstance(e.func, n.Member):
            _index_names(e.func.obj, syms, acc, idx, in_index)
        return
    for c in e.children():
        _index_names(c, syms, acc, idx, in_index)


def _uniq(vs: list) -> tuple:
    seen: dict[int, VarInfo] = {}
    for v in vs:
        seen.setdefault(id(v), v)
    return tuple(seen.values())


def arg_info(e: n.Expr, syms: Symbols) -> ArgInfo:
    acc: list = []
    idx: list = []
    _index_names(e, syms, acc, idx)
    return ArgInfo(e, _uniq(acc), _uniq(idx))


def _post_order_calls(e: n.Node) -> Iterator[n.Call]:
    for c in e.children():
        yield from _post_order_calls(c)
    if isinstance(e, n.Call):
        yield e


def _statement_exprs(s: n.Stmt) -> list:
    if isinstance(s, n.ExprStmt):
        return [s.expr]
    if isinstance(s, n.DeclStmt):
        return [d.init for d in s.declarators if d.init is not None]
    if isinstance(s, (n.If, n.While, n.Switch)):
        return [s.cond]
    if isinstance(s, n.For):
        return [x for x in (s.cond, s.incr) if x is not None]
    if isinstance(s, n.Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, n.CaseLabel):
        return [s.value] if s.value is not None else []
    return []


def _sub_statements(s: n.Stmt) -> list:
    if isinstance(s, n.Block):
        return list(s.stmts)
    if isinstance(s, n.If):
        return [x for x in (s.then, s.else_) if x is not None]
    if isinstance(s, n.While):
        return [s.body]
    if isinstance(s, n.For):
        return [x for x in (s.init, s.body) if x is not None]
    if isinstance(s, n.Switch):
        return [s.body]
    return []


def _binding(s: n.Stmt, call: n.Call, syms: Symbols) -> ResultBinding:
    if isinstance(s, n.ExprStmt) and isinstance(s.expr, n.Assign) and s.expr.value is call:
        root = _lvalue_root(s.expr.target, syms)
        if root is not None:
            return ExistingVar(root.name, s.expr.target, s.expr.op)
    if isinstance(s, n.DeclStmt):
        for d in s.declarators:
            if d.init is call:
                if d.type.ref:
                    return ExistingVar(d.name, None, "&")
                return FreshDecl(d.name, d.type.const, d)
    return None


def enumerate_call_sites(func: FunctionInfo, syms: Symbols) -> list[CallSiteInfo]:
    """Call sites of ``func`` in source order; nested calls innermost-first."""
    if func.node is None or func.node.body is None:
        return []
    out: list[CallSiteInfo] = []

    def visit(s: n.Stmt, scopes: tuple) -> None:
        if isinstance(s, n.Block):
            scopes = scopes + (s.nid,)
        for e in _statement_exprs(s):
            for call in _post_order_calls(e):
                out.append(_site(call, s, scopes))
        if isinstance(s, n.For) and s.init is not None:
            for e in _statement_exprs(s.init):
                for call in _post_order_calls(e):
                    out.append(_site(call, s, scopes))
            visit(s.body, scopes)
            return
        for sub in _sub_statements(s):
            visit(sub, scopes)

    def _site(call: n.Call, s: n.Stmt, scopes: tuple) -> CallSiteInfo:
        callee = syms.callee_of.get(call.nid)
        is_std = isinstance(call.func, n.Name) and call.func.name.startswith("std::")
        external = callee is None or callee.is_external or is_std
        receiver = None
        implicit = False
        if isinstance(call.func, n.Member):
            receiver = arg_info(call.func.obj, syms)
        elif callee is not None and callee.is_method:
            implicit = True
        binding = _binding(s, call, syms)
        bvars = None
        if isinstance(binding, FreshDecl):
            bvars = ((syms.var_of[binding.declarator.nid],), ())
        elif isinstance(binding, ExistingVar) and binding.target is not None:
            info = arg_info(binding.target, syms)
            bvars = (info.var_infos, info.index_infos)
        return CallSiteInfo(
            callee=callee,
            call=call,
            stmt=s,
            stmt_span=s.span,
            args=[arg_info(a, syms) for a in call.args],
            result_binding=binding,
            enclosing_scopes=scopes,
            is_std_or_external=external,
            receiver=receiver,
            implicit_this=implicit,
            binding_vars=bvars,
        )

    visit(func.node.body, ())
    return out

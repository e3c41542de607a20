"""Syntax tree of the supported C++ subset. Every node carries its source span."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .source import SourceSpan

BUILTIN_TYPES = frozenset(
    {"void", "int", "long", "double", "float", "bool", "char", "unsigned", "short", "size_t"}
)
FLOAT_TYPES = frozenset({"double", "float", "long double"})


@dataclass(frozen=True)
class TypeRef:
    """A declared type: ``const base *...* &`` plus optional array bounds.

    ``const`` qualifies the base (pointee) type. ``dims`` holds array bounds,
    ``None`` for an unsized ``[]``.
    """

    base: str
    const: bool = False
    ptr: int = 0
    ref: bool = False
    dims: tuple = ()

    @property
    def is_pointer(self) -> bool:
        return self.ptr > 0 and not self.dims

    @property
    def is_array(self) -> bool:
        return bool(self.dims)

    @property
    def is_class(self) -> bool:
        return self.base not in BUILTIN_TYPES and " " not in self.base

    @property
    def is_void(self) -> bool:
        return self.base == "void" and self.ptr == 0 and not self.dims

    @property
    def is_float(self) -> bool:
        return self.base in FLOAT_TYPES and self.ptr == 0

    def without_const(self) -> "TypeRef":
        return TypeRef(self.base, False, self.ptr, self.ref, self.dims)

    def without_ref(self) -> "TypeRef":
        return TypeRef(self.base, self.const, self.ptr, False, self.dims)

    def element(self) -> "TypeRef":
        """Type of ``x[i]`` / ``*x``."""
        if self.dims:
            return TypeRef(self.base, self.const, self.ptr, False, self.dims[1:])
        return TypeRef(self.base, self.const, max(self.ptr - 1, 0), False, ())

    def decayed(self) -> "TypeRef":
        if self.dims:
            return TypeRef(self.base, self.const, self.ptr + 1, False, self.dims[1:])
        return self

    def spelling(self, name: str = "") -> str:
        """C++ spelling of a declaration of ``name`` with this type."""
        head = ("const " if self.const else "") + self.base
        stars = "*" * self.ptr
        if self.dims:
            bounds = "".join(f"[{'' if d is None else d}]" for d in self.dims)
            if self.ref:
                return f"{head}{stars} (&{name}){bounds}"
            return f"{head}{stars} {name}{bounds}"
        core = stars + ("&" if self.ref else "")
        return f"{head}{core} {name}" if name else f"{head}{core}"

    def __str__(self) -> str:
        return self.spelling()


_counter = 0


def _next_id() -> int:
    # Parsed trees are renumbered 1..N in pre-order; nodes built later by
    # the transformer get negative ids so the two never collide.
    global _counter
    _counter -= 1
    return _counter


@dataclass(eq=False)
class Node:
    span: SourceSpan
    nid: int = field(default_factory=_next_id, init=False, repr=False)

    def children(self) -> Iterator["Node"]:
        return iter(())

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children())))


# ---------------------------------------------------------------- expressions


@dataclass(eq=False)
class Expr(Node):
    pass


@dataclass(eq=False)
class Literal(Expr):
    kind: str  # int | float | bool | null | char | string
    value: object
    text: str


@dataclass(eq=False)
class Name(Expr):
    name: str

    @property
    def is_qualified(self) -> bool:
        return "::" in self.name


@dataclass(eq=False)
class This(Expr):
    pass


@dataclass(eq=False)
class Subscript(Expr):
    base: Expr
    index: Expr

    def children(self):
        yield self.base
        yield self.index


@dataclass(eq=False)
class Member(Expr):
    obj: Expr
    name: str
    arrow: bool

    def children(self):
        yield self.obj


@dataclass(eq=False)
class Unary(Expr):
    op: str  # - + ! ~ & * ++ --  (prefix)
    operand: Expr

    def children(self):
        yield self.operand


@dataclass(eq=False)
class Postfix(Expr):
    op: str  # ++ --
    operand: Expr

    def children(self):
        yield self.operand


@dataclass(eq=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        yield self.left
        yield self.right


@dataclass(eq=False)
class Assign(Expr):
    op: str  # = += -= ...
    target: Expr
    value: Expr

    def children(self):
        yield self.target
        yield self.value


@dataclass(eq=False)
class Conditional(Expr):
    cond: Expr
    then: Expr
    else_: Expr

    def children(self):
        yield self.cond
        yield self.then
        yield self.else_


@dataclass(eq=False)
class Call(Expr):
    func: Expr  # Name or Member
    args: list

    def children(self):
        yield self.func
        yield from self.args

    @property
    def callee_name(self) -> str:
        if isinstance(self.func, Name):
            return self.func.name
        if isinstance(self.func, Member):
            return self.func.name
        return "<expr>"


@dataclass(eq=False)
class Cast(Expr):
    type: TypeRef
    operand: Expr

    def children(self):
        yield self.operand


@dataclass(eq=False)
class New(Expr):
    type: TypeRef
    args: list
    array_size: Optional[Expr] = None

    def children(self):
        yield from self.args
        if self.array_size is not None:
            yield self.array_size


@dataclass(eq=False)
class Delete(Expr):
    operand: Expr
    is_array: bool

    def children(self):
        yield self.operand


@dataclass(eq=False)
class InitList(Expr):
    items: list

    def children(self):
        yield from self.items


# ----------------------------------------------------------------- statements


@dataclass(eq=False)
class Stmt(Node):
    pass


@dataclass(eq=False)
class Declarator(Node):
    name: str
    type: TypeRef
    init: Optional[Expr]
    name_span: SourceSpan

    def children(self):
        if self.init is not None:
            yield self.init


@dataclass(eq=False)
class DeclStmt(Stmt):
    declarators: list
    is_static: bool = False

    def children(self):
        yield from self.declarators


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr

    def children(self):
        yield self.expr


@dataclass(eq=False)
class Block(Stmt):
    stmts: list
    close_span: SourceSpan = None  # the closing brace

    def children(self):
        yield from self.stmts


@dataclass(eq=False)
class If(Stmt):
    cond: Expr
    then: Stmt
    else_: Optional[Stmt]

    def children(self):
        yield self.cond
        yield self.then
        if self.else_ is not None:
            yield self.else_


@dataclass(eq=False)
class While(Stmt):
    cond: Expr
    body: Stmt

    def children(self):
        yield self.cond
        yield self.body


@dataclass(eq=False)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    incr: Optional[Expr]
    body: Stmt

    def children(self):
        if self.init is not None:
            yield self.init
        if self.cond is not None:
            yield self.cond
        if self.incr is not None:
            yield self.incr
        yield self.body


@dataclass(eq=False)
class Switch(Stmt):
    cond: Expr
    body: Block

    def children(self):
        yield self.cond
        yield self.body


@dataclass(eq=False)
class CaseLabel(Stmt):
    value: Optional[Expr]  # None for ``default:``

    def children(self):
        if self.value is not None:
            yield self.value


@dataclass(eq=False)
class Break(Stmt):
    pass


@dataclass(eq=False)
class Continue(Stmt):
    pass


@dataclass(eq=False)
class Return(Stmt):
    value: Optional[Expr]

    def children(self):
        if self.value is not None:
            yield self.value


@dataclass(eq=False)
class Empty(Stmt):
    pass


@dataclass(eq=False)
class Directive(Stmt):
    text: str


# ---------------------------------------------------------------- top level


@dataclass(eq=False)
class Param(Node):
    name: str
    type: TypeRef


@dataclass(eq=False)
class FunctionDef(Node):
    name: str
    class_name: Optional[str]
    return_type: TypeRef
    params: list
    is_const_method: bool
    body: Optional[Block]
    name_span: SourceSpan
    is_static: bool = False

    def children(self):
        yield from self.params
        if self.body is not None:
            yield self.body

    @property
    def qualified_name(self) -> str:
        return f"{self.class_name}::{self.name}" if self.class_name else self.name


@dataclass(eq=False)
class ClassDef(Node):
    name: str
    fields: list  # Declarators
    methods: list  # FunctionDefs defined or declared in the body

    def children(self):
        yield from self.fields
        yield from self.methods


@dataclass(eq=False)
class Trivia(Node):
    """Whitespace and comments between top-level items."""


@dataclass(eq=False)
class Passthrough(Node):
    """Top-level text kept verbatim (directives, using-declarations, forward class declarations)."""

    text: str


@dataclass(eq=False)
class TranslationUnit(Node):
    items: list

    def children(self):
        yield from self.items

    @property
    def functions(self) -> list:
        out = []
        for item in self.items:
            if isinstance(item, FunctionDef):
                out.append(item)
            elif isinstance(item, ClassDef):
                out.extend(item.methods)
        return out

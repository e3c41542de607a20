"""Closure-compiled interpreter for the C++ subset.

Without a runtime the program runs as written. With a runtime and a
:class:`UnitPlan` the planned tasks, taskwaits, taskgroups, promotions and
return rewrites are executed as the emitted code would execute them.
"""
from __future__ import annotations

import math
import re
from typing import Callable, Optional

from ..analysis.plan import (
    DeclStep,
    FunctionPlan,
    ResidualStep,
    ReturnMode,
    TaskPlan,
    TaskStep,
    UnitPlan,
)
from ..frontend import nodes as n
from ..frontend.symbols import FunctionInfo, Symbols, VarInfo
from .memory import (
    POISON,
    Block,
    InterpreterError,
    MemoryState,
    Pointer,
    RecursionLimit,
    StructValue,
    UndefinedBehavior,
    coerce,
    copy_value,
    snapshot,
)

NORMAL, BREAK, CONTINUE, RETURN = 0, 1, 2, 3
MAX_CALL_DEPTH = 150  # each level costs several Python frames

_FMT = re.compile(r"%([-+ #0]*)(\d+|\*)?(?:\.(\d+|\*))?(hh|h|ll|l|L|z|j|t)?([diouxXeEfFgGcs%])")


def c_format(fmt: str, args: list) -> str:
    out = []
    pos = 0
    it = iter(args)
    for m in _FMT.finditer(fmt):
        out.append(fmt[pos:m.start()])
        pos = m.end()
        flags, width, prec, _, conv = m.groups()
        if conv == "%":
            out.append("%")
            continue
        if width == "*":
            width = str(next(it))
        if prec == "*":
            prec = str(next(it))
        v = next(it, None)
        spec = "%" + flags + (width or "") + (f".{prec}" if prec is not None else "")
        if v is POISON:
            out.append("<poison>")
            continue
        if conv in "diu":
            out.append((spec + "d") % int(v))
        elif conv in "oxX":
            out.append((spec + conv) % (int(v) & 0xFFFFFFFF if int(v) < 0 else int(v)))
        elif conv in "eEfFgG":
            out.append((spec + conv) % float(v))
        elif conv == "c":
            out.append((spec + "c") % chr(int(v) & 0xFF))
        else:
            out.append((spec + "s") % (v if isinstance(v, str) else str(v)))
    out.append(fmt[pos:])
    return "".join(out)


def _cdiv(a, b):
    if a is POISON or b is POISON:
        return POISON
    if isinstance(a, float) or isinstance(b, float):
        if b == 0:
            raise UndefinedBehavior("floating division by zero")
        return a / b
    if b == 0:
        raise UndefinedBehavior("integer division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _cmod(a, b):
    if a is POISON or b is POISON:
        return POISON
    if isinstance(a, float) or isinstance(b, float):
        return math.fmod(a, b)
    if b == 0:
        raise UndefinedBehavior("integer modulo by zero")
    return a - b * _cdiv(a, b)


def _add(a, b):
    if a is POISON or b is POISON:
        return POISON
    if isinstance(a, Pointer):
        return a + b
    if isinstance(b, Pointer):
        return b + a
    return a + b


def _sub(a, b):
    if a is POISON or b is POISON:
        return POISON
    return a - b


def _arith(f):
    def op(a, b):
        if a is POISON or b is POISON:
            return POISON
        return f(a, b)
    return op


def _eq(a, b):
    if a is POISON or b is POISON:
        return POISON
    if isinstance(a, Pointer) or isinstance(b, Pointer):
        if isinstance(a, Pointer) and isinstance(b, Pointer):
            return a.block is b.block and a.idx == b.idx
        return False
    return a == b


def _ptr_cmp(f):
    def op(a, b):
        if a is POISON or b is POISON:
            return POISON
        if isinstance(a, Pointer) and isinstance(b, Pointer):
            if a.block is not b.block:
                raise UndefinedBehavior("comparison of pointers into different objects")
            return f(a.idx, b.idx)
        return f(a, b)
    return op


BINOPS = {
    "+": _add,
    "-": _sub,
    "*": _arith(lambda a, b: a * b),
    "/": _cdiv,
    "%": _cmod,
    "<": _ptr_cmp(lambda a, b: a < b),
    ">": _ptr_cmp(lambda a, b: a > b),
    "<=": _ptr_cmp(lambda a, b: a <= b),
    ">=": _ptr_cmp(lambda a, b: a >= b),
    "==": _eq,
    "!=": lambda a, b: POISON if (r := _eq(a, b)) is POISON else not r,
    "&": _arith(lambda a, b: a & b),
    "|": _arith(lambda a, b: a | b),
    "^": _arith(lambda a, b: a ^ b),
    "<<": _arith(lambda a, b: a << b),
    ">>": _arith(lambda a, b: a >> b),
}

PURE_MATH = {
    "sqrt": math.sqrt, "fabs": math.fabs, "pow": math.pow, "exp": math.exp, "log": math.log,
    "log10": math.log10, "sin": math.sin, "cos": math.cos, "tan": math.tan, "atan": math.atan,
    "atan2": math.atan2, "floor": math.floor, "ceil": math.ceil, "fmin": min, "fmax": max,
}


def _builtin(name: str):
    base = name[5:] if name.startswith("std::") else name
    if base in PURE_MATH:
        f = PURE_MATH[base]
        if base in ("floor", "ceil"):
            return lambda *a: float(f(*a))
        return lambda *a: POISON if POISON in a else f(*a)
    if base in ("abs", "labs"):
        return lambda a: POISON if a is POISON else abs(a)
    if base == "min":
        return lambda a, b: POISON if POISON in (a, b) else (b if b < a else a)
    if base == "max":
        return lambda a, b: POISON if POISON in (a, b) else (b if a < b else a)
    return None


def _rv(lv):
    """Read an lvalue; arrays decay to pointers."""
    v = lv[0].read(lv[1])
    if type(v) is Block:
        return Pointer(v, 0)
    return v


def _truthy(v) -> bool:
    if v is POISON:
        raise UndefinedBehavior("branch on a value read from dead storage")
    if isinstance(v, Pointer):
        return True
    return bool(v)


def _default(ty: n.TypeRef, classes: dict, label: str):
    """Default cell content for storage of type ``ty`` (zero-filled)."""
    if ty.dims:
        d = ty.dims[0]
        if d is None:
            raise InterpreterError(f"unsized array '{label}'")
        inner = ty.element()
        return Block([_default(inner, classes, label) for _ in range(int(d))], label, inner)
    if ty.ptr:
        return None
    if ty.base in classes:
        return _new_struct(ty.base, classes, label)
    if ty.is_float:
        return 0.0
    if ty.base == "bool":
        return False
    return 0


def _new_struct(cls: str, classes: dict, label: str) -> StructValue:
    cdef = classes[cls]
    fields = {}
    for d in cdef.fields:
        fields[d.name] = Block([_default(d.type, classes, f"{label}.{d.name}")], f"{label}.{d.name}", d.type)
    return StructValue(cls, fields)


def _fill(target: Block, values: list) -> None:
    for i, v in enumerate(values):
        if i >= len(target.cells):
            raise InterpreterError("too many initializers")
        if isinstance(v, list):
            _fill(target.cells[i], v)
        else:
            target.cells[i] = coerce(v, target.ctype)


class Env:
    __slots__ = ("slots", "this", "ret", "active", "group", "calls")

    def __init__(self, nslots: int, calls: int):
        self.slots: list = [None] * nslots
        self.this: Optional[StructValue] = None
        self.ret = None
        self.active = True
        self.group = None
        self.calls = calls

    def fork(self) -> "Env":
        e = Env.__new__(Env)
        e.slots = list(self.slots)
        e.this = self.this
        e.ret = None
        e.active = self.active
        e.group = self.group
        e.calls = self.calls
        return e


class _Compiled:
    def __init__(self, info: FunctionInfo):
        self.info = info
        self.slot_of: dict[int, int] = {}
        self.nslots = 0
        self.run: Optional[Callable] = None

    def slot(self, v: VarInfo) -> int:
        s = self.slot_of.get(id(v))
        if s is None:
            s = self.slot_of[id(v)] = self.nslots
            self.nslots += 1
        return s


class Interpreter:
    """Executes one translation unit.

    ``runtime`` and ``plan`` switch on the task semantics; ``stdout`` collects
    printf output.
    """

    def __init__(self, tree: n.TranslationUnit, symbols: Optional[Symbols] = None,
                 plan: Optional[UnitPlan] = None, runtime=None, count_ops: bool = False):
        self.tree = tree
        self.syms = symbols or Symbols(tree)
        self.plan = plan if runtime is not None else None
        self.rt = runtime
        self.count_ops = count_ops and runtime is not None
        self.stdout: list[str] = []
        self.classes = dict(self.syms.classes)
        self.compiled: dict[int, _Compiled] = {}
        self.globals: dict[int, tuple] = {}
        self.global_vars: list[VarInfo] = []
        self.statics: dict[int, tuple] = {}
        self.entry_snapshot: Optional[dict] = None
        self._comp: Optional[_Compiled] = None
        self._fp: Optional[FunctionPlan] = None
        self._init_globals()

    # ------------------------------------------------------------ globals

    def _init_globals(self) -> None:
        self.global_vars = list(self.syms.globals.values())
        self.by_scope: dict[int, list] = {}
        seen = set()
        for v in self.syms.var_of.values():
            if v.kind == "local" and isinstance(v.decl, n.Declarator) and id(v) not in seen:
                seen.add(id(v))
                self.by_scope.setdefault(v.scope, []).append(v)
        genv = Env(0, 0)
        for v in self.global_vars:
            init = v.decl.init if isinstance(v.decl, n.Declarator) else None
            self.globals[id(v)] = self._alloc(v.type, v.name, None if init is None else
                                              self._const_init(init, genv))

    def _const_init(self, e: n.Expr, env: Env):
        if isinstance(e, n.InitList):
            return [self._const_init(x, env) for x in e.items]
        return self.cx(e, None, {})(env)

    def _alloc(self, ty: n.TypeRef, label: str, init=None) -> tuple:
        cell = _default(ty, self.classes, label)
        b = Block([cell], label, ty)
        if init is not None:
            if isinstance(init, list):
                _fill(cell, init)
            else:
                b.cells[0] = coerce(copy_value(init), ty)
        return (b, 0)

    # ------------------------------------------------------------ entry

    def function(self, name: str) -> FunctionInfo:
        return self.syms.function(name)

    def call_entry(self, name: str = "main", args: Optional[dict] = None):
        """Run ``name``; returns (return value, MemoryState)."""
        f = self.function(name)
        comp = self.compile(f)
        env = Env(comp.nslots, 0)
        argvals = []
        for p in f.node.params:
            v = (args or {}).get(p.name, 0)
            if isinstance(v, list):
                blk = Block([coerce(x, p.type.element()) for x in v], p.name, p.type.element())
                v = Pointer(blk, 0)
            argvals.append(v)
        try:
            ret = comp.run(env, argvals, None, entry=True)
        except RecursionError:
            raise RecursionLimit(MAX_CALL_DEPTH) from None
        state = MemoryState()
        if self.entry_snapshot:
            state.update(self.entry_snapshot)
        for v in self.global_vars:
            state[v.name] = snapshot(self.globals[id(v)][0].read(0))
        state["<return>"] = snapshot(ret)
        state["<stdout>"] = "".join(self.stdout)
        return ret, state

    def _snapshot_frame(self, comp: _Compiled, env: Env) -> None:
        f = comp.info
        out = {}
        body = f.node.body
        params = [self.syms.var_of[p.nid] for p in f.node.params]
        for v in params + self.by_scope.get(body.nid, []):
            if id(v) not in comp.slot_of:
                continue
            lv = env.slots[comp.slot_of[id(v)]]
            if lv is None:
                continue
            out[f"{f.name}::{v.name}"] = snapshot(lv[0].read(lv[1]))
        self.entry_snapshot = out

    # ------------------------------------------------------------ functions

    def fplan(self, f: FunctionInfo) -> Optional[FunctionPlan]:
        if self.plan is None:
            return None
        fp = self.plan.functions.get(f)
        return fp if fp is not None and fp.needs_taskgroup else None

    def compile(self, f: FunctionInfo) -> _Compiled:
        comp = self.compiled.get(id(f))
        if comp is not None:
            return comp
        comp = self.compiled[id(f)] = _Compiled(f)
        fn = f.node
        if fn is None or fn.body is None:
            raise InterpreterError(f"function '{f.qualified_name}' has no body")
        fp = self.fplan(f)
        self._comp = comp
        self._fp = fp
        params = []
        for p in fn.params:
            v = self._param_var(f, p)
            params.append((comp.slot(v), p.type, p.name))
        body_stmts = [s for s in fn.body.stmts if fp is None or s is not fp.trailing_return]
        stmts = [self.cs(s) for s in body_stmts]
        trailing = None
        if fp is not None and fp.trailing_return is not None:
            trailing = self.cx(fp.trailing_return.value, None, {})
        body_vars = [comp.slot(v) for v in self._scope_vars(fn.body.nid)]
        ret_type = f.return_type
        interp = self
        rt = self.rt
        is_entry_fn = f
        inner_block = fp is not None and fp.inner_block
        name = f.qualified_name

        def run_body(env: Env) -> int:
            for st in stmts:
                code = st(env)
                if code:
                    return code
            return NORMAL

        def run(env: Env, argvals: list, this, entry: bool = False):
            if env.calls > MAX_CALL_DEPTH:
                raise RecursionLimit(MAX_CALL_DEPTH)
            for (slot, ty, pname), val in zip(params, argvals):
                if ty.ref:
                    env.slots[slot] = val  # an lvalue
                else:
                    env.slots[slot] = (Block([coerce(copy_value(val), ty)], pname, ty), 0)
            if this is not None:
                env.this = this
            if rt is not None:
                rt.on_call(name, [_rv(a) if isinstance(a, tuple) else a for a in argvals])
            if fp is None:
                code = run_body(env)
                value = env.ret if code == RETURN else None
            else:
                g = rt.group_begin()
                env.group = g
                env.active = g.active
                code = run_body(env)
                if inner_block and code == NORMAL:
                    rt.taskwait()
                rt.group_end(g)
                value = trailing(env) if trailing is not None else env.ret
            if entry:
                interp._snapshot_frame(comp, env)
            for s in body_vars:
                lv = env.slots[s]
                if lv is not None and lv[1] == 0 and lv[0].label.startswith("@"):
                    lv[0].kill()
            for slot, ty, _ in params:
                if not ty.ref:
                    env.slots[slot][0].kill()
            if value is not None and not ret_type.is_void:
                value = coerce(copy_value(value), ret_type)
            return value

        comp.run = run
        return comp

    def _param_var(self, f: FunctionInfo, p: n.Param) -> VarInfo:
        v = self.syms.var_of.get(p.nid)
        if v is None:
            raise InterpreterError(f"unresolved parameter '{p.name}' of '{f.qualified_name}'")
        return v

    def _scope_vars(self, scope_nid: int) -> list:
        res = list(self.by_scope.get(scope_nid, ()))
        if self._fp is not None:
            res += [t for t in self._fp.temps if t.scope == scope_nid]
        return res

    # ------------------------------------------------------------ lvalues

    def var_lv(self, v: VarInfo) -> Callable:
        if v.kind == "global":
            lv = self.globals[id(v)]
            return lambda env: lv
        if v.kind == "field":
            fname = v.name

            def field_lv(env):
                return (env.this.fields[fname], 0)
            return field_lv
        s = self._comp.slot(v)

        def local_lv(env):
            lv = env.slots[s]
            if lv is None:
                raise InterpreterError(f"'{v.name}' used before its declaration ran")
            return lv
        return local_lv

    def cl(self, e: n.Expr, subst: dict) -> Callable:
        """Compile ``e`` as an lvalue: returns env -> (block, index)."""
        if e.nid in subst:
            return self.var_lv(subst[e.nid])
        if isinstance(e, n.Name):
            v = self.syms.var_of.get(e.nid)
            if v is None:
                raise InterpreterError(f"'{e.name}' is not a variable")
            return self.var_lv(v)
        if isinstance(e, n.Subscript):
            base = self.cx(e.base, None, subst)
            idx = self.cx(e.index, None, subst)

            def sub_lv(env):
                p = base(env)
                i = idx(env)
                if p is POISON or i is POISON:
                    raise UndefinedBehavior("subscript through a value read from dead storage")
                if not isinstance(p, Pointer):
                    raise UndefinedBehavior("subscript of a non-pointer")
                return (p.block, p.idx + i)
            return sub_lv
        if isinstance(e, n.Unary) and e.op == "*":
            ptr = self.cx(e.operand, None, subst)

            def deref_lv(env):
                p = ptr(env)
                if not isinstance(p, Pointer):
                    raise UndefinedBehavior("dereference of a null or invalid pointer")
                return (p.block, p.idx)
            return deref_lv
        if isinstance(e, n.Member):
            fname = e.name
            if e.arrow:
                ptr = self.cx(e.obj, None, subst)

                def arrow_lv(env):
                    p = ptr(env)
                    if not isinstance(p, Pointer):
                        raise UndefinedBehavior("member access through a null pointer")
                    obj = p.block.read(p.idx)
                    if obj is POISON:
                        raise UndefinedBehavior("member access on dead storage")
                    return (obj.fields[fname], 0)
                return arrow_lv
            obj_lv = self.cl(e.obj, subst)

            def dot_lv(env):
                b, i = obj_lv(env)
                obj = b.read(i)
                if obj is POISON:
                    raise UndefinedBehavior("member access on dead storage")
                return (obj.fields[fname], 0)
            return dot_lv
        if isinstance(e, (n.Unary,)) and e.op in ("++", "--"):
            upd = self.cx(e, None, subst)
            inner = self.cl(e.operand, subst)

            def pre_lv(env):
                upd(env)
                return inner(env)
            return pre_lv
        if isinstance(e, n.Assign):
            run = self.cx(e, None, subst)
            target = self.cl(e.target, subst)

            def assign_lv(env):
                run(env)
                return target(env)
            return assign_lv
        if isinstance(e, n.This):
            raise InterpreterError("'this' is not an lvalue")
        raise InterpreterError(f"expression at {e.span.start} is not an lvalue")

    # ------------------------------------------------------------ rvalues

    def cx(self, e: n.Expr, _unused, subst: dict) -> Callable:
        """Compile ``e`` as an rvalue: returns env -> value."""
        if e.nid in subst:
            lv = self.var_lv(subst[e.nid])
            return lambda env: _rv(lv(env))
        if isinstance(e, n.Literal):
            val = e.value
            return lambda env: val
        if isinstance(e, n.Name):
            v = self.syms.var_of.get(e.nid)
            if v is None:
                if e.name in ("NULL",):
                    return lambda env: None
                raise InterpreterError(f"unknown name '{e.name}'")
            lv = self.var_lv(v)
            return lambda env: _rv(lv(env))
        if isinstance(e, (n.Subscript, n.Member)) or (isinstance(e, n.Unary) and e.op == "*"):
            lv = self.cl(e, subst)
            return lambda env: _rv(lv(env))
        if isinstance(e, n.This):
            def this_ptr(env):
                return Pointer(Block([env.this], "this"), 0)
            return this_ptr
        if isinstance(e, n.Unary):
            return self._unary(e, subst)
        if isinstance(e, n.Postfix):
            lv = self.cl(e.operand, subst)
            delta = 1 if e.op == "++" else -1

            def post(env):
                b, i = lv(env)
                old = _rv((b, i))
                b.write(i, coerce(_add(old, delta), b.ctype if b.ctype and not b.ctype.dims else
                                  _cell_type(b)))
                return old
            return post
        if isinstance(e, n.Binary):
            return self._binary(e, subst)
        if isinstance(e, n.Assign):
            return self._assign(e, subst)
        if isinstance(e, n.Conditional):
            c = self.cx(e.cond, None, subst)
            a = self.cx(e.then, None, subst)
            b = self.cx(e.else_, None, subst)
            return lambda env: a(env) if _truthy(c(env)) else b(env)
        if isinstance(e, n.Call):
            return self._call(e, subst)
        if isinstance(e, n.Cast):
            return self._cast(e, subst)
        if isinstance(e, n.New):
            return self._new(e, subst)
        if isinstance(e, n.Delete):
            p = self.cx(e.operand, None, subst)

            def delete(env):
                ptr = p(env)
                if ptr is None:
                    return None
                if not isinstance(ptr, Pointer) or not ptr.block.alive:
                    raise UndefinedBehavior("delete of an invalid pointer")
                ptr.block.kill()
                return None
            return delete
        if isinstance(e, n.InitList):
            items = [self.cx(x, None, subst) for x in e.items]
            return lambda env: [f(env) for f in items]
        raise InterpreterError(f"cannot evaluate {type(e).__name__}")

    def _unary(self, e: n.Unary, subst: dict) -> Callable:
        op = e.op
        if op == "&":
            lv = self.cl(e.operand, subst)

            def addr(env):
                b, i = lv(env)
                return Pointer(b, i)
            return addr
        if op in ("++", "--"):
            lv = self.cl(e.operand, subst)
            delta = 1 if op == "++" else -1

            def pre(env):
                b, i = lv(env)
                new = coerce(_add(_rv((b, i)), delta), _cell_type(b))
                b.write(i, new)
                return new
            return pre
        x = self.cx(e.operand, None, subst)
        if op == "-":
            return lambda env: POISON if (v := x(env)) is POISON else -v
        if op == "+":
            return x
        if op == "!":
            return lambda env: not _truthy(x(env))
        if op == "~":
            return lambda env: POISON if (v := x(env)) is POISON else ~v
        raise InterpreterError(f"unary '{op}'")

    def _binary(self, e: n.Binary, subst: dict) -> Callable:
        a = self.cx(e.left, None, subst)
        b = self.cx(e.right, None, subst)
        op = e.op
        if op == "&&":
            return lambda env: _truthy(a(env)) and _truthy(b(env))
        if op == "||":
            return lambda env: _truthy(a(env)) or _truthy(b(env))
        f = BINOPS.get(op)
        if f is None:
            raise InterpreterError(f"binary '{op}'")
        return lambda env: f(a(env), b(env))

    def _assign(self, e: n.Assign, subst: dict) -> Callable:
        lv = self.cl(e.target, subst)
        val = self.cx(e.value, None, subst)
        if e.op == "=":
            def assign(env):
                v = val(env)
                b, i = lv(env)
                v = coerce(copy_value(v), _cell_type(b))
                b.write(i, v)
                return v
            return assign
        f = BINOPS[e.op[:-1]]

        def compound(env):
            v = val(env)
            b, i = lv(env)
            new = coerce(f(_rv((b, i)), v), _cell_type(b))
            b.write(i, new)
            return new
        return compound

    def _cast(self, e: n.Cast, subst: dict) -> Callable:
        x = self.cx(e.operand, None, subst)
        ty = e.type
        if ty.ptr:
            return x
        if ty.is_float:
            return lambda env: POISON if (v := x(env)) is POISON else float(v)
        if ty.base == "bool":
            return lambda env: _truthy(x(env))
        return lambda env: POISON if (v := x(env)) is POISON else coerce(int(v), ty)

    def _new(self, e: n.New, subst: dict) -> Callable:
        ty = e.type
        classes = self.classes
        if e.array_size is not None:
            size = self.cx(e.array_size, None, subst)

            def new_array(env):
                k = size(env)
                return Pointer(Block([_default(ty, classes, "heap") for _ in range(k)], "heap", ty), 0)
            return new_array
        args = [self.cx(a, None, subst) for a in e.args]

        def new_obj(env):
            cell = _default(ty, classes, "heap")
            if args:
                cell = coerce(copy_value(args[0](env)), ty)
            return Pointer(Block([cell], "heap", ty), 0)
        return new_obj

    def _call(self, e: n.Call, subst: dict) -> Callable:
        callee = self.syms.callee_of.get(e.nid)
        name = e.func.name if isinstance(e.func, n.Name) else e.callee_name
        if callee is None or callee.is_external:
            return self._builtin_call(e, name, subst)
        arg_fns = []
        for a, p in zip(e.args, callee.params):
            if p.type is not None and p.type.ref:
                arg_fns.append(self.cl(a, subst))
            else:
                arg_fns.append(self.cx(a, None, subst))
        recv = None
        if isinstance(e.func, n.Member):
            if e.func.arrow:
                ptr = self.cx(e.func.obj, None, subst)

                def recv(env):
                    p = ptr(env)
                    if not isinstance(p, Pointer):
                        raise UndefinedBehavior("method call through a null pointer")
                    return p.block.read(p.idx)
            else:
                olv = self.cl(e.func.obj, subst)

                def recv(env):
                    b, i = olv(env)
                    return b.read(i)
        interp = self

        def call(env):
            comp = interp.compiled.get(id(callee)) or interp._compile_nested(callee)
            argvals = [f(env) for f in arg_fns]
            this = recv(env) if recv is not None else (env.this if callee.is_method else None)
            if this is POISON:
                raise UndefinedBehavior("method call on dead storage")
            sub = Env(comp.nslots, env.calls + 1)
            return comp.run(sub, argvals, this)
        return call

    def _compile_nested(self, f: FunctionInfo) -> _Compiled:
        saved = (getattr(self, "_comp", None), getattr(self, "_fp", None))
        try:
            return self.compile(f)
        finally:
            self._comp, self._fp = saved

    def _builtin_call(self, e: n.Call, name: str, subst: dict) -> Callable:
        if name in ("printf", "std::printf"):
            args = [self.cx(a, None, subst) for a in e.args]
            out = self.stdout

            def printf(env):
                vals = [f(env) for f in args]
                text = c_format(vals[0], vals[1:])
                out.append(text)
                return len(text)
            return printf
        if name in ("puts", "std::puts"):
            arg = self.cx(e.args[0], None, subst)
            out = self.stdout
            return lambda env: out.append(str(arg(env)) + "\n") or 0
        if name == "putchar":
            arg = self.cx(e.args[0], None, subst)
            out = self.stdout
            return lambda env: out.append(chr(arg(env) & 0xFF)) or 0
        if name in ("std::swap", "swap"):
            a = self.cl(e.args[0], subst)
            b = self.cl(e.args[1], subst)

            def swap(env):
                la, lb = a(env), b(env)
                va, vb = la[0].read(la[1]), lb[0].read(lb[1])
                la[0].write(la[1], vb)
                lb[0].write(lb[1], va)
            return swap
        f = _builtin(name)
        if f is None:
            raise InterpreterError(f"call to unknown external function '{name}'")
        args = [self.cx(a, None, subst) for a in e.args]
        return lambda env: f(*[g(env) for g in args])

    # ------------------------------------------------------------ statements

    def cs(self, s: n.Stmt) -> Callable:
        """Compile a statement: returns env -> control code."""
        fp = self._fp
        if fp is not None:
            low = fp.lowered.get(s.nid)
            if low is not None:
                return self._lowered(low)
        inner = self._cs_plain(s)
        if fp is None:
            return self._counted(inner)
        rt = self.rt
        pre = []
        if ("before", s.nid, 0) in fp.syncs:
            pre.append(lambda env: rt.taskwait())
        for t in fp.exit_cleanups.get(s.nid, []):
            pre.append(self._spawner(t, None))
        if not pre:
            return self._counted(inner)

        def with_pre(env):
            for p in pre:
                p(env)
            return inner(env)
        return self._counted(with_pre)

    def _counted(self, f: Callable) -> Callable:
        if not self.count_ops:
            return f
        rt = self.rt

        def counted(env):
            rt.ops += 1
            return f(env)
        return counted

    def _cs_sub(self, s: n.Stmt) -> Callable:
        """Substatement with its own scope (if/loop bodies)."""
        body = self.cs(s)
        fp = self._fp
        end = []
        if fp is not None and not isinstance(s, n.Block) and ("end", s.nid) in fp.syncs:
            rt = self.rt
            end.append(lambda env: rt.taskwait())
        kills = [] if isinstance(s, n.Block) else self._kill_list(s.nid)
        if not end and not kills:
            return body

        def sub(env):
            code = body(env)
            if code == NORMAL:
                for f in end:
                    f(env)
            for k in kills:
                lv = env.slots[k]
                if lv is not None:
                    lv[0].kill()
            return code
        return sub

    def _kill_list(self, scope_nid: int) -> list:
        fp = self._fp
        comp = self._comp
        out = []
        for v in self._scope_vars(scope_nid):
            if v.type.ref:
                continue
            if fp is not None and fp.is_promoted(v):
                continue
            decl_stmt = None
            if isinstance(v.decl, n.Declarator):
                decl_stmt = v.decl
            if decl_stmt is not None and id(v) in self._static_vars:
                continue
            out.append(comp.slot(v))
        return out

    @property
    def _static_vars(self) -> set:
        s = getattr(self, "_static_cache", None)
        if s is None:
            s = set()
            for node in self.tree.walk():
                if isinstance(node, n.DeclStmt) and node.is_static:
                    for d in node.declarators:
                        v = self.syms.var_of.get(d.nid)
                        if v is not None:
                            s.add(id(v))
            self._static_cache = s
        return s

    def _cs_plain(self, s: n.Stmt) -> Callable:
        if isinstance(s, n.ExprStmt):
            f = self.cx(s.expr, None, {})

            def expr_stmt(env):
                f(env)
                return NORMAL
            return expr_stmt
        if isinstance(s, n.DeclStmt):
            decls = [self._declare(d, s.is_static, None, {}) for d in s.declarators]

            def decl_stmt(env):
                for d in decls:
                    d(env)
                return NORMAL
            return decl_stmt
        if isinstance(s, n.Block):
            return self._block(s)
        if isinstance(s, n.If):
            c = self.cx(s.cond, None, {})
            a = self._cs_sub(s.then)
            b = self._cs_sub(s.else_) if s.else_ is not None else None

            def if_stmt(env):
                if _truthy(c(env)):
                    return a(env)
                if b is not None:
                    return b(env)
                return NORMAL
            return if_stmt
        if isinstance(s, n.While):
            c = self.cx(s.cond, None, {})
            body = self._cs_sub(s.body)

            def while_stmt(env):
                while _truthy(c(env)):
                    code = body(env)
                    if code == BREAK:
                        break
                    if code == RETURN:
                        return code
                return NORMAL
            return while_stmt
        if isinstance(s, n.For):
            return self._for(s)
        if isinstance(s, n.Switch):
            return self._switch(s)
        if isinstance(s, n.Break):
            return lambda env: BREAK
        if isinstance(s, n.Continue):
            return lambda env: CONTINUE
        if isinstance(s, n.Return):
            return self._return(s, {})
        if isinstance(s, (n.Empty, n.Directive, n.CaseLabel)):
            return lambda env: NORMAL
        raise InterpreterError(f"cannot execute {type(s).__name__}")

    def _return(self, s: n.Return, subst: dict) -> Callable:
        f = self.cx(s.value, None, subst) if s.value is not None else None

        def ret(env):
            env.ret = f(env) if f is not None else None
            return RETURN
        return ret

    def _block(self, b: n.Block) -> Callable:
        stmts = [self.cs(s) for s in b.stmts]
        fp = self._fp
        rt = self.rt
        end = []
        if fp is not None:
            if ("end", b.nid) in fp.syncs:
                end.append(lambda env: rt.taskwait())
            if self.plan.options.promotion == "inline":
                for cand in fp.promoted.values():
                    if cand.var.scope == b.nid:
                        lv = self.var_lv(cand.var)
                        end.append(lambda env, lv=lv: lv(env)[0].kill())
            for t in fp.scope_cleanups.get(b.nid, []):
                end.append(self._spawner(t, None))
        kills = self._kill_list(b.nid)

        def block(env):
            code = NORMAL
            for st in stmts:
                code = st(env)
                if code:
                    break
            if code == NORMAL:
                for f in end:
                    f(env)
            for k in kills:
                lv = env.slots[k]
                if lv is not None:
                    lv[0].kill()
            return code
        return block

    def _for(self, s: n.For) -> Callable:
        init = self.cs(s.init) if s.init is not None else None
        cond = self.cx(s.cond, None, {}) if s.cond is not None else None
        incr = self.cx(s.incr, None, {}) if s.incr is not None else None
        body = self._cs_sub(s.body)
        kills = self._kill_list(s.nid)
        fp = self._fp
        rt = self.rt
        after = fp is not None and ("after", s.nid) in fp.syncs

        def for_stmt(env):
            if init is not None:
                init(env)
            code = NORMAL
            while cond is None or _truthy(cond(env)):
                code = body(env)
                if code == BREAK:
                    code = NORMAL
                    break
                if code == RETURN:
                    break
                code = NORMAL
                if incr is not None:
                    incr(env)
            for k in kills:
                lv = env.slots[k]
                if lv is not None:
                    lv[0].kill()
            if after and code == NORMAL:
                rt.taskwait()
            return code
        return for_stmt

    def _switch(self, s: n.Switch) -> Callable:
        cond = self.cx(s.cond, None, {})
        stmts = []
        labels = []  # (value fn or None for default, index)
        for st in s.body.stmts:
            if isinstance(st, n.CaseLabel):
                labels.append((None if st.value is None else self.cx(st.value, None, {}), len(stmts)))
            else:
                stmts.append(self.cs(st))
        block_end = self._switch_end(s.body)

        def switch(env):
            v = cond(env)
            if v is POISON:
                raise UndefinedBehavior("switch on a value read from dead storage")
            start = None
            for f, idx in labels:
                if f is not None and f(env) == v:
                    start = idx
                    break
            if start is None:
                start = next((idx for f, idx in labels if f is None), len(stmts))
            code = NORMAL
            for st in stmts[start:]:
                code = st(env)
                if code:
                    break
            if code == BREAK:
                code = NORMAL
            return block_end(env, code)
        return switch

    def _switch_end(self, body: n.Block) -> Callable:
        fp = self._fp
        rt = self.rt
        end = []
        if fp is not None:
            if ("end", body.nid) in fp.syncs:
                end.append(lambda env: rt.taskwait())
            for t in fp.scope_cleanups.get(body.nid, []):
                end.append(self._spawner(t, None))
        kills = self._kill_list(body.nid)

        def finish(env, code):
            if code == NORMAL:
                for f in end:
                    f(env)
            for k in kills:
                lv = env.slots[k]
                if lv is not None:
                    lv[0].kill()
            return code
        return finish

    def _declare(self, d: n.Declarator, is_static: bool, step: Optional[DeclStep], subst: dict) -> Callable:
        v = self.syms.var_of[d.nid] if d is not None else step.var
        return self._declare_var(v, step.type if step is not None else d.type,
                                  (step.init if step is not None else d.init), is_static,
                                  step.promotion if step is not None else None, subst)

    def _declare_var(self, v: VarInfo, ty: n.TypeRef, init: Optional[n.Expr], is_static: bool,
                     promotion, subst: dict) -> Callable:
        s = self._comp.slot(v)
        classes = self.classes
        label = "@" + v.name  # stack storage
        if ty.ref:
            if init is None:
                raise InterpreterError(f"reference '{v.name}' without initializer")
            target = self.cl(init, subst)

            def bind(env):
                env.slots[s] = target(env)
            return bind
        init_fn = None
        if init is not None:
            init_fn = self.cx(init, None, subst)
        if promotion is not None:
            label = "heap " + v.name
        statics = self.statics
        key = v.decl.nid if isinstance(v.decl, n.Declarator) else id(v)

        def declare(env):
            if is_static and key in statics:
                env.slots[s] = statics[key]
                return
            cell = _default(ty, classes, label)
            b = Block([cell], label, ty)
            if init_fn is not None:
                val = init_fn(env)
                if isinstance(val, list):
                    _fill(cell, val)
                else:
                    b.cells[0] = coerce(copy_value(val), ty)
            env.slots[s] = (b, 0)
            if is_static:
                statics[key] = (b, 0)
        return declare

    # ------------------------------------------------------------ planned code

    def _lowered(self, low) -> Callable:
        fp = self._fp
        rt = self.rt
        s = low.stmt
        parts = []
        for k, st in enumerate(low.steps):
            if ("before", s.nid, k) in fp.syncs:
                parts.append(lambda env: rt.taskwait() or NORMAL)
            if isinstance(st, DeclStep):
                f = self._declare_var(st.var, st.type, st.init, False, st.promotion, st.subst)
                parts.append(lambda env, f=f: f(env) or NORMAL)
            elif isinstance(st, TaskStep):
                f = self._spawner(st.task, low)
                parts.append(lambda env, f=f: f(env) or NORMAL)
            elif isinstance(st, ResidualStep):
                parts.append(self._residual(st))

        def lowered(env):
            for p in parts:
                code = p(env)
                if code:
                    return code
            return NORMAL
        return self._counted(lowered)

    def _residual(self, st: ResidualStep) -> Callable:
        fp = self._fp
        s = st.stmt
        if isinstance(s, n.Return) and fp.return_mode is ReturnMode.GOTO:
            val = self.cx(s.value, None, st.subst) if s.value is not None else None
            cleanups = [self._spawner(t, None) for t in fp.exit_cleanups.get(s.nid, [])]

            def goto_return(env):
                env.ret = val(env) if val is not None else None
                for c in cleanups:
                    c(env)
                return RETURN
            return goto_return
        if isinstance(s, n.ExprStmt):
            f = self.cx(s.expr, None, st.subst)
            def residual(env):
                f(env)
                return NORMAL
            return residual
        if isinstance(s, n.Return):
            return self._return(s, st.subst)
        raise InterpreterError(f"unexpected residual {type(s).__name__}")

    def _dep_keys(self, vars_: tuple) -> list:
        return [self.var_lv(v) for v in vars_]

    def _spawner(self, t: TaskPlan, low) -> Callable:
        rt = self.rt
        comp = self._comp
        in_lvs = self._dep_keys(t.ins)
        out_lvs = self._dep_keys(t.inouts)
        in_names = tuple(v.name for v in t.ins)
        out_names = tuple(v.name for v in t.inouts)
        fp_slots = [(comp.slot(v), v) for v in t.firstprivate]
        label = t.label
        if t.kind == "cleanup":
            target = self.var_lv(t.cleanup.var)
            body_of = None
        else:
            body_of = self._task_body(t, low)

        def spawn(env):
            reads = frozenset((b.uid, i) for b, i in (lv(env) for lv in in_lvs))
            writes = frozenset((b.uid, i) for b, i in (lv(env) for lv in out_lvs))
            if body_of is None:
                heap = target(env)[0]

                def body():
                    heap.kill()
            else:
                tenv = env.fork()
                for slot, v in fp_slots:
                    old = tenv.slots[slot]
                    tenv.slots[slot] = (Block([copy_value(old[0].read(old[1]))], "fp " + v.name, v.type), 0)

                def body():
                    body_of(tenv)
            g = env.group
            rt.spawn(label, reads, writes, in_names, out_names, body, env.active, g.depth_local + 1)
        return spawn

    def _task_body(self, t: TaskPlan, low) -> Callable:
        subst = t.subst
        if t.assign_var is not None:
            lv = self.var_lv(t.assign_var)
            call = self.cx(t.call, None, subst)

            def assign_body(env):
                v = call(env)
                b, i = lv(env)
                b.write(i, coerce(copy_value(v), _cell_type(b)))
            return assign_body
        if t.assign_expr is not None:
            return self.cx(low.stmt.expr, None, subst)
        return self.cx(t.call, None, subst)


def _cell_type(b: Block) -> Optional[n.TypeRef]:
    ty = b.ctype
    if ty is None:
        return None
    if ty.dims:
        return None
    return ty

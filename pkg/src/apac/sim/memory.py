"""Storage model of the interpreter.

Every variable owns a one-cell :class:`Block`. Arrays are blocks stored in a
cell, class objects are :class:`StructValue` instances. Storage that went out
of scope or was deleted is marked dead: reads from it yield :data:`POISON`
and writes to it are dropped, which is how use-after-scope bugs surface as
differing final states instead of silently working.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional

from ..frontend.nodes import TypeRef


class InterpreterError(RuntimeError):
    pass


class UndefinedBehavior(InterpreterError):
    pass


class RecursionLimit(InterpreterError):
    def __init__(self, depth: int):
        super().__init__(f"call depth exceeded {depth}")
        self.depth = depth


class _Poison:
    __slots__ = ()

    def __repr__(self) -> str:
        return "<poison>"

    def __bool__(self):
        raise UndefinedBehavior("branch on a value read from dead storage")


POISON = _Poison()

_block_ids = itertools.count()


class Block:
    __slots__ = ("cells", "alive", "label", "ctype", "uid")

    def __init__(self, cells: list, label: str = "", ctype: Optional[TypeRef] = None):
        self.cells = cells
        self.alive = True
        self.label = label
        self.ctype = ctype
        self.uid = next(_block_ids)

    def __repr__(self) -> str:
        return f"Block({self.label}, {len(self.cells)}{'' if self.alive else ', dead'})"

    def read(self, idx: int):
        if not self.alive:
            return POISON
        try:
            if idx < 0:
                raise IndexError
            return self.cells[idx]
        except IndexError:
            raise UndefinedBehavior(f"index {idx} outside {self.label}[{len(self.cells)}]") from None

    def write(self, idx: int, value) -> None:
        if not self.alive:
            return
        if not 0 <= idx < len(self.cells):
            raise UndefinedBehavior(f"index {idx} outside {self.label}[{len(self.cells)}]")
        self.cells[idx] = value

    def kill(self) -> None:
        self.alive = False
        for c in self.cells:
            if isinstance(c, Block):
                c.kill()
            elif isinstance(c, StructValue):
                c.kill()


@dataclass(frozen=True)
class Pointer:
    block: Block
    idx: int = 0

    def __add__(self, k: int) -> "Pointer":
        return Pointer(self.block, self.idx + k)

    def __sub__(self, other):
        if isinstance(other, Pointer):
            if other.block is not self.block:
                raise UndefinedBehavior("difference of pointers into different objects")
            return self.idx - other.idx
        return Pointer(self.block, self.idx - other)


class StructValue:
    __slots__ = ("cls", "fields")

    def __init__(self, cls: str, fields: dict):
        self.cls = cls
        self.fields = fields  # name -> Block of one cell

    def kill(self) -> None:
        for b in self.fields.values():
            b.kill()

    def copy(self) -> "StructValue":
        return StructValue(self.cls, {k: Block([copy_value(b.read(0))], b.label, b.ctype)
                                      for k, b in self.fields.items()})


def copy_value(v: Any) -> Any:
    """Value semantics for assignment: arrays and objects are deep-copied."""
    if isinstance(v, StructValue):
        return v.copy()
    if isinstance(v, Block):
        return Block([copy_value(c) for c in v.cells], v.label, v.ctype)
    return v


INT_BITS = {"char": 8, "short": 16, "int": 32, "long": 64, "long long": 64}


def coerce(v: Any, ty: Optional[TypeRef]) -> Any:
    """Convert a value stored into storage of type ``ty``."""
    if type(v) is int and ty is not None and ty.base == "int" and not ty.ptr and not ty.dims \
            and -0x80000000 <= v <= 0x7FFFFFFF:
        return v
    if ty is None or v is POISON or ty.ptr or ty.dims:
        return v
    base = ty.base
    if base in ("float", "double", "long double"):
        if isinstance(v, (int, float, bool)):
            return float(v)
        return v
    if base == "bool":
        return bool(v) if isinstance(v, (int, float, bool)) else v
    unsigned = base.startswith("unsigned")
    core = base.replace("unsigned ", "").replace("signed ", "")
    if core == "unsigned":
        core = "int"
    bits = INT_BITS.get(core)
    if bits is None or not isinstance(v, (int, float, bool)):
        return v
    x = int(v)
    mask = (1 << bits) - 1
    x &= mask
    if not unsigned and x >> (bits - 1):
        x -= 1 << bits
    return x


def snapshot(v: Any, depth: int = 0) -> Any:
    """Schedule-independent rendering of a value for state comparison."""
    if depth > 8:
        return "..."
    if v is POISON:
        return "<poison>"
    if isinstance(v, Block):
        if not v.alive:
            return "<dead>"
        return tuple(snapshot(c, depth + 1) for c in v.cells)
    if isinstance(v, StructValue):
        return tuple(sorted((k, snapshot(b.cells[0] if b.alive else POISON, depth + 1))
                            for k, b in v.fields.items()))
    if isinstance(v, Pointer):
        b = v.block
        if not b.alive:
            return ("ptr", "<dead>")
        return ("ptr", tuple(snapshot(c, depth + 1) for c in b.cells[v.idx:]))
    if v is None:
        return None
    if isinstance(v, float):
        return float(repr(v)) if v == v else "nan"
    return v


class MemoryState(dict):
    """Variable name -> snapshot of its final value.

    Keys are ``<function>::<name>`` for locals and parameters of the entry,
    plain names for globals, plus ``<return>`` and ``<stdout>``.
    """

    def diff(self, other: "MemoryState") -> dict:
        keys = set(self) | set(other)
        return {k: (self.get(k), other.get(k)) for k in sorted(keys) if self.get(k) != other.get(k)}

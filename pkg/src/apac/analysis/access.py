"""Access modes of parameters and depend clauses of call sites."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..frontend.symbols import CallSiteInfo, DeclaratorKind, ParamInfo, VarInfo


class AccessMode(enum.Enum):
    IN = "in"
    INOUT = "inout"


class ArityMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DependClause:
    in_vars: tuple = ()
    inout_vars: tuple = ()

    def __post_init__(self):
        if set(self.in_vars) & set(self.inout_vars):
            raise ValueError("in and inout lists overlap")

    @property
    def is_empty(self) -> bool:
        return not self.in_vars and not self.inout_vars

    def pragma_clauses(self) -> list[str]:
        out = []
        if self.in_vars:
            out.append(f"depend(in: {', '.join(self.in_vars)})")
        if self.inout_vars:
            out.append(f"depend(inout: {', '.join(self.inout_vars)})")
        return out


def classify_parameter(param: ParamInfo) -> AccessMode:
    """In for by-value or const-qualified parameters, InOut otherwise.

    The caller-side argument form plays no part in the decision.
    """
    if param.declarator is DeclaratorKind.BY_VALUE or param.is_const_qualified:
        return AccessMode.IN
    return AccessMode.INOUT


class _Collector:
    """Ordered in/inout sets where inout wins over in."""

    def __init__(self):
        self.modes: dict[int, AccessMode] = {}
        self.order: list[VarInfo] = []

    def add(self, var: VarInfo, mode: AccessMode) -> None:
        key = id(var)
        if key not in self.modes:
            self.modes[key] = mode
            self.order.append(var)
        elif mode is AccessMode.INOUT:
            self.modes[key] = AccessMode.INOUT

    def add_all(self, vars_: Iterable[VarInfo], mode: AccessMode) -> None:
        for v in vars_:
            self.add(v, mode)

    def split(self) -> tuple[tuple, tuple]:
        ins = tuple(v for v in self.order if self.modes[id(v)] is AccessMode.IN)
        outs = tuple(v for v in self.order if self.modes[id(v)] is AccessMode.INOUT)
        return ins, outs


@dataclass(frozen=True)
class DependVars:
    """Depend lists as resolved variables (names may repeat across scopes)."""

    ins: tuple
    inouts: tuple

    def clause(self) -> DependClause:
        return DependClause(tuple(v.name for v in self.ins), tuple(v.name for v in self.inouts))


def depend_vars(call: CallSiteInfo, extra_in: Sequence[VarInfo] = (), binding_vars=None) -> DependVars:
    """Resolved-variable form of :func:`classify_call`.

    ``binding_vars`` overrides the variables of the result binding (used when
    a hoisted temporary receives the value).
    """
    callee = call.callee
    if callee is None:
        raise ValueError(f"call to '{call.name}' is not resolved")
    if len(call.args) != len(callee.params):
        raise ArityMismatch(
            f"call to '{callee.qualified_name}' passes {len(call.args)} arguments, expected {len(callee.params)}"
        )
    acc = _Collector()
    for arg, param in zip(call.args, callee.params):
        acc.add_all(arg.var_infos, classify_parameter(param))
        acc.add_all(arg.index_infos, AccessMode.IN)
    if call.receiver is not None:
        mode = AccessMode.IN if callee.is_const_method else AccessMode.INOUT
        acc.add_all(call.receiver.var_infos, mode)
        acc.add_all(call.receiver.index_infos, AccessMode.IN)
    if binding_vars is not None:
        out_vars, idx_vars = binding_vars
        acc.add_all(out_vars, AccessMode.INOUT)
        acc.add_all(idx_vars, AccessMode.IN)
    acc.add_all(extra_in, AccessMode.IN)
    ins, outs = acc.split()
    return DependVars(ins, outs)


def classify_call(call: CallSiteInfo) -> DependClause:
    """Depend clause of a call site.

    Every variable referenced by an argument takes the access mode of the
    matching parameter, variables used as subscript indices are read, the
    result binding is written and the receiver of a method call is read for
    const methods and written otherwise. A variable with mixed modes ends up
    in the inout list only.
    """
    return depend_vars(call, binding_vars=call.binding_vars).clause()


def find_index_dependencies(call: CallSiteInfo, pending: Sequence[DependClause]) -> bool:
    """True iff some subscript index of an argument is written by a pending task."""
    written = set()
    for clause in pending:
        written.update(clause.inout_vars)
    if not written:
        return False
    for arg in call.args:
        if written.intersection(arg.index_vars):
            return True
    if call.receiver is not None and written.intersection(call.receiver.index_vars):
        return True
    return False

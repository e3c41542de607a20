"""Parameter classification and depend clauses of call sites."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apac.analysis import (
    AccessMode,
    ArityMismatch,
    DependClause,
    classify_call,
    classify_parameter,
    find_index_dependencies,
)
from apac.frontend import DeclaratorKind, ParamInfo, Symbols, enumerate_call_sites, parse_translation_unit


def _sites(text: str, func: str):
    tree = parse_translation_unit(text)
    syms = Symbols(tree)
    return enumerate_call_sites(syms.function(func), syms)


@pytest.mark.parametrize(
    "decl, const, mode",
    [
        (DeclaratorKind.BY_VALUE, False, AccessMode.IN),
        (DeclaratorKind.BY_VALUE, True, AccessMode.IN),
        (DeclaratorKind.REFERENCE, True, AccessMode.IN),
        (DeclaratorKind.POINTER, True, AccessMode.IN),
        (DeclaratorKind.REFERENCE, False, AccessMode.INOUT),
        (DeclaratorKind.POINTER, False, AccessMode.INOUT),
    ],
)
def test_classify_parameter_table(decl, const, mode):
    assert classify_parameter(ParamInfo("p", "int", decl, const)) is mode


def test_depend_clause_rejects_overlap():
    with pytest.raises(ValueError):
        DependClause(("a",), ("a",))


def test_pragma_clauses():
    assert DependClause(("i", "n"), ("a",)).pragma_clauses() == ["depend(in: i, n)", "depend(inout: a)"]
    assert DependClause().is_empty and DependClause().pragma_clauses() == []


def test_reference_out_param_and_binding():
    text = "int g(int& x, int y) { x += y; return x; }\nvoid f() { int a = 0; int b = 1; int r = g(a, b); }\n"
    (site,) = _sites(text, "f")
    assert classify_call(site) == DependClause(("b",), ("a", "r"))


def test_index_variables_are_read():
    text = "void g(int& x) { x = 1; }\nvoid f(int* arr, int i) { g(arr[i]); }\n"
    (site,) = _sites(text, "f")
    assert classify_call(site) == DependClause(("i",), ("arr",))


def test_mixed_modes_end_up_inout_only():
    text = "void g(int& x, int y) { x = y; }\nvoid f(int a) { g(a, a); }\n"
    (site,) = _sites(text, "f")
    assert classify_call(site) == DependClause((), ("a",))


def test_const_method_reads_receiver():
    text = (
        "class Acc {\npublic:\n  int v;\n  int get() const { return v; }\n  void put(int x) { v = x; }\n};\n"
        "void f(Acc& a, int k) { int r = a.get(); a.put(k); }\n"
    )
    get, put = _sites(text, "f")
    assert classify_call(get) == DependClause(("a",), ("r",))
    assert classify_call(put) == DependClause(("k",), ("a",))


def test_arity_mismatch():
    text = "int g(int x, int y) { return x + y; }\nvoid f(int a) { int r = g(a, 2); }\n"
    (site,) = _sites(text, "f")
    site.args.pop()
    with pytest.raises(ArityMismatch):
        classify_call(site)


def test_index_dependency_detection():
    text = "void g(int& x) { x = 1; }\nvoid f(int* arr, int i) { g(arr[i]); }\n"
    (site,) = _sites(text, "f")
    assert find_index_dependencies(site, [DependClause((), ("i",))])
    assert not find_index_dependencies(site, [DependClause(("i",), ("arr",))])
    assert not find_index_dependencies(site, [])


# ------------------------------------------------------------------ properties

PARAM_FORMS = {
    ("value", False): "int",
    ("value", True): "const int",
    ("ref", False): "int&",
    ("ref", True): "const int&",
    ("ptr", False): "int*",
    ("ptr", True): "const int*",
}
VARS = ["v0", "v1", "v2", "v3"]


@st.composite
def call_cases(draw):
    nparams = draw(st.integers(0, 4))
    params = [(draw(st.sampled_from(["value", "ref", "ptr"])), draw(st.booleans())) for _ in range(nparams)]
    args = []  # (text, root vars, index vars)
    for kind, _ in params:
        if kind == "ptr":
            form = draw(st.sampled_from(["arr", "arr+"]))
            if form == "arr":
                args.append(("arr", ["arr"], []))
            else:
                v = draw(st.sampled_from(VARS))
                args.append((f"arr + {v}", ["arr", v], []))
        else:
            form = draw(st.sampled_from(["var", "elem", "sum"] if kind == "value" else ["var", "elem"]))
            if form == "var":
                v = draw(st.sampled_from(VARS))
                args.append((v, [v], []))
            elif form == "elem":
                v = draw(st.sampled_from(VARS))
                args.append((f"arr[{v}]", ["arr"], [v]))
            else:
                a, b = draw(st.sampled_from(VARS)), draw(st.sampled_from(VARS))
                args.append((f"{a} * 2 + {b}", [a, b], []))
    bind = draw(st.sampled_from([None, "v0", "out"]))
    return params, args, bind


def _oracle(params, args, bind):
    modes: dict[str, str] = {}
    order: list[str] = []

    def put(v, m):
        if v not in modes:
            order.append(v)
            modes[v] = m
        elif m == "inout":
            modes[v] = "inout"

    for (kind, const), (_, roots, idx) in zip(params, args):
        m = "in" if kind == "value" or const else "inout"
        for v in roots:
            put(v, m)
        for v in idx:
            put(v, "in")
    if bind is not None:
        put(bind, "inout")
    return DependClause(tuple(v for v in order if modes[v] == "in"), tuple(v for v in order if modes[v] == "inout"))


@settings(max_examples=400, deadline=None)
@given(call_cases())
def test_classify_call_matches_rule(case):
    params, args, bind = case
    sig = ", ".join(f"{PARAM_FORMS[p]} p{i}" for i, p in enumerate(params))
    call = f"g({', '.join(a[0] for a in args)})"
    stmt = {None: f"{call};", "v0": f"v0 = {call};", "out": f"int out = {call};"}[bind]
    text = (
        f"int g({sig}) {{ return 0; }}\n"
        f"void f(int* arr, int v0, int v1, int v2, int v3) {{ {stmt} }}\n"
    )
    (site,) = _sites(text, "f")
    got = classify_call(site)
    assert got == _oracle(params, args, bind)
    assert not set(got.in_vars) & set(got.inout_vars)


clauses = st.builds(
    lambda a, b: DependClause(tuple(sorted(a - b)), tuple(sorted(b))),
    st.sets(st.sampled_from(VARS + ["arr"])),
    st.sets(st.sampled_from(VARS + ["arr"])),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(clauses, max_size=4), st.lists(clauses, max_size=4), st.sampled_from(VARS))
def test_index_dependency_is_monotone(pending, more, idx):
    """More pending writers can only add index dependencies."""
    text = f"void g(int& x) {{ x = 1; }}\nvoid f(int* arr, int v0, int v1, int v2, int v3) {{ g(arr[{idx}]); }}\n"
    (site,) = _sites(text, "f")
    before = find_index_dependencies(site, pending)
    after = find_index_dependencies(site, pending + more)
    assert not before or after
    assert before == any(idx in c.inout_vars for c in pending)

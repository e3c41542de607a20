"""Lexer, parser, spans and symbol tables."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apac.frontend import (
    DeclaratorKind,
    ParamInfo,
    SourceFile,
    SourceSpan,
    SourceSyntaxError,
    Symbols,
    UnsupportedConstruct,
    enumerate_call_sites,
    enumerate_functions,
    parse_translation_unit,
)
from apac.frontend import nodes as n
from apac.frontend.lexer import token_texts, tokenize
from support import GOLDEN_NAMES, corpus_names, corpus_source, golden_pair


# ------------------------------------------------------------------ lexer


def test_tokens_skip_comments_and_keep_directives():
    toks = tokenize("#include <cstdio>\n// note\nint x = 0x1F; /* c */ double y = 1.5e-3;\n")
    assert toks[0].kind == "directive" and toks[0].text == "#include <cstdio>"
    texts = [t.text for t in toks if t.kind != "eof"]
    assert texts[1:] == ["int", "x", "=", "0x1F", ";", "double", "y", "=", "1.5e-3", ";"]


def test_token_offsets_slice_back_to_text():
    src = 'int main() { printf("a b\\n"); return a->b >= 3 && c != d; }'
    for t in tokenize(src):
        if t.kind != "eof":
            assert src[t.start:t.end] == t.text


def test_multi_char_operators_are_single_tokens():
    assert list(token_texts("a <<= b; c->d; e::f; g++; h >= i; j && k;")) == [
        "a", "<<=", "b", ";", "c", "->", "d", ";", "e", "::", "f", ";",
        "g", "++", ";", "h", ">=", "i", ";", "j", "&&", "k", ";",
    ]


def test_unterminated_comment_is_a_syntax_error():
    with pytest.raises(SourceSyntaxError):
        tokenize("int x; /* open")


# ------------------------------------------------------------------ source


def test_line_col_and_indent():
    src = SourceFile("int a;\n    int b;\n", "f.cpp")
    off = src.text.index("b")
    assert src.line_col(off) == (2, 9)
    assert src.line_indent(off) == "    "
    assert src.location(src.span(off, off + 1)) == "f.cpp:2:9"


def test_span_rejects_inverted_range():
    with pytest.raises(ValueError):
        SourceSpan(5, 2)


def test_non_utf8_input_is_rejected():
    with pytest.raises(UnicodeDecodeError):
        SourceFile(b"int x = '\xff';")


def test_multibyte_text_keeps_byte_offsets():
    src = SourceFile('const char* s = "héllo"; int k;')
    k = src.text.index("k;")
    assert k == src.data.index(b"k;")


# ------------------------------------------------------------------ parser


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_parses(name):
    tree = parse_translation_unit(corpus_source(name), f"{name}.cpp")
    assert any(f.name == "main" for f in tree.functions)


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_inputs_parse(name):
    parse_translation_unit(golden_pair(name)[0], f"{name}.cpp")


def _nesting_ok(node: n.Node) -> bool:
    for child in node.children():
        if child is None:
            continue
        if not (node.span.start <= child.span.start and child.span.end <= node.span.end):
            return False
        if not _nesting_ok(child):
            return False
    return True


@pytest.mark.parametrize("name", corpus_names())
def test_child_spans_nest_inside_parents(name):
    tree = parse_translation_unit(corpus_source(name), f"{name}.cpp")
    for fn in tree.functions:
        assert _nesting_ok(fn)


def test_node_ids_are_unique():
    tree = parse_translation_unit(corpus_source("md_toy"))
    ids = [node.nid for node in tree.walk()]
    assert len(ids) == len(set(ids))


def test_statement_span_covers_semicolon():
    text = "void f(int& a) { a = a + 1; }"
    tree = parse_translation_unit(text)
    stmt = tree.functions[0].body.stmts[0]
    assert text[stmt.span.start:stmt.span.end] == "a = a + 1;"


@pytest.mark.parametrize(
    "text, construct",
    [
        ("template <typename T> T id(T x) { return x; }", "template"),
        ("int f() { auto x = 1; return x; }", "auto"),
        ("void f(int&& x) {}", "rvalue reference"),
        ("void f() { throw 1; }", "throw"),
        ("int f(int x = 3) { return x; }", "default argument"),
        ("void f(int& x) { do { x--; } while (x > 0); }", "do-while loop"),
    ],
)
def test_unsupported_constructs_are_named(text, construct):
    with pytest.raises(UnsupportedConstruct) as exc:
        parse_translation_unit(text)
    assert exc.value.construct == construct


def test_syntax_error_reports_location():
    src = SourceFile("int main() {\n  int x = ;\n}\n", "bad.cpp")
    with pytest.raises(SourceSyntaxError) as exc:
        parse_translation_unit(src)
    assert exc.value.format(src).startswith("bad.cpp:2:")


# ------------------------------------------------------------------ symbols


def test_param_info_declarators():
    tree = parse_translation_unit("void f(int a, const double& b, int* c, const int* d, char& e) {}")
    params = enumerate_functions(tree)[0].params
    got = [(p.name, p.declarator, p.is_const_qualified) for p in params]
    assert got == [
        ("a", DeclaratorKind.BY_VALUE, False),
        ("b", DeclaratorKind.REFERENCE, True),
        ("c", DeclaratorKind.POINTER, False),
        ("d", DeclaratorKind.POINTER, True),
        ("e", DeclaratorKind.REFERENCE, False),
    ]


def test_prototype_and_definition_are_one_function():
    tree = parse_translation_unit("int g(int x);\nint h() { return g(1); }\nint g(int x) { return x; }\n")
    funcs = enumerate_functions(tree)
    assert [f.name for f in funcs] == ["g", "h"]
    assert not funcs[0].is_external


def test_call_sites_in_post_order():
    text = "int a(int x) { return x; }\nint b(int x) { return x; }\nvoid f() { int r = a(b(1)); }\n"
    tree = parse_translation_unit(text)
    syms = Symbols(tree)
    sites = enumerate_call_sites(syms.function("f"), syms)
    assert [s.name for s in sites] == ["b", "a"]


def test_call_site_binding_and_arguments():
    text = "int g(int& v, int k) { return v + k; }\nvoid f(int* arr, int i) { int r = g(arr[i], 2); }\n"
    tree = parse_translation_unit(text)
    syms = Symbols(tree)
    (site,) = enumerate_call_sites(syms.function("f"), syms)
    assert site.result_binding.name == "r"
    assert site.args[0].vars == ("arr",)
    assert site.args[0].index_vars == ("i",)
    assert site.callee is syms.function("g")


def test_library_calls_are_external():
    tree = parse_translation_unit('#include <cstdio>\nvoid f() { printf("x"); }\n')
    syms = Symbols(tree)
    (site,) = enumerate_call_sites(syms.function("f"), syms)
    assert site.is_std_or_external and site.callee is None


def test_globals_are_collected():
    tree = parse_translation_unit("int counter = 0;\ndouble scale;\nvoid f() { counter += 1; }\n")
    assert set(Symbols(tree).globals) == {"counter", "scale"}


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["int", "double", "char", "float"]),
            st.sampled_from(["", "&", "*"]),
            st.booleans(),
        ),
        max_size=6,
    )
)
def test_param_info_round_trip(spec):
    """ParamInfo read back from generated signatures matches what was written."""
    decl = []
    for i, (ty, sigil, const) in enumerate(spec):
        decl.append(f"{'const ' if const else ''}{ty}{sigil} p{i}")
    tree = parse_translation_unit(f"void f({', '.join(decl)}) {{}}")
    params = enumerate_functions(tree)[0].params
    kinds = {"": DeclaratorKind.BY_VALUE, "&": DeclaratorKind.REFERENCE, "*": DeclaratorKind.POINTER}
    assert [(p.base_type, p.declarator, p.is_const_qualified) for p in params] == [
        (ty, kinds[sigil], const) for ty, sigil, const in spec
    ]
    assert all(isinstance(p, ParamInfo) for p in params)


@pytest.mark.parametrize(
    "stmt",
    ["for (int i = 0; i < 3; i++) { a += i; }", "while (a < 9) a += 2;", "switch (a) { case 1: a = 2; }"],
)
def test_compound_statement_span_covers_body(stmt):
    text = f"void f(int& a) {{ {stmt} }}"
    tree = parse_translation_unit(text)
    s = tree.functions[0].body.stmts[0]
    assert text[s.span.start:s.span.end] == stmt


@pytest.mark.parametrize("expr", ["(double)a * 2", "(int)(a + 1.5)"])
def test_cast_span_covers_operand(expr):
    text = f"void f(int a) {{ double r = {expr}; }}"
    tree = parse_translation_unit(text)
    assert all(_nesting_ok(fn) for fn in tree.functions)

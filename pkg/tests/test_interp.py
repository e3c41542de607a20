"""Sequential semantics of the interpreter."""
from __future__ import annotations

import pytest

from apac.sim import Program, RecursionLimit, UndefinedBehavior, sequential_execute
from support import corpus_names, corpus_source, quicksort_source


def run(src: str, **kw):
    return sequential_execute(Program.from_source(src, "p.cpp", **kw))


def out(body: str, pre: str = "") -> str:
    return run(f"#include <cstdio>\n{pre}\nint main() {{ {body} return 0; }}\n")["<stdout>"]


@pytest.mark.parametrize(
    "expr, want",
    [
        ("-7 / 2", "-3"),
        ("-7 % 2", "-1"),
        ("7 / -2", "-3"),
        ("1 << 4 | 3", "19"),
        ("(5 > 3) + (2 >= 3)", "1"),
        ("10 - 2 * 3 + 8 / 4", "6"),
        ("!0 && 3", "1"),
        ("7 ^ 2", "5"),
        ("~5", "-6"),
        ("(int)3.9", "3"),
        ("(int)-3.9", "-3"),
        ("1 ? 4 : 5", "4"),
    ],
)
def test_integer_arithmetic_follows_c(expr, want):
    assert out(f'printf("%d\\n", {expr});') == want + "\n"


def test_printf_formats():
    got = out('double d = 1.0 / 3; printf("%.3f|%5.1f|%-4d|%c|%s|%x|%%\\n", d, 2.25, 7, 65, "hi", 255);')
    assert got == "0.333|  2.2|7   |A|hi|ff|%\n"


def test_puts_and_putchar():
    assert out('puts("a"); putchar(98); putchar(10);') == "a\nb\n"


def test_unsigned_wraps():
    assert out('unsigned int v = 0; v = v - 1; printf("%u\\n", v);') == "4294967295\n"


def test_int_store_wraps():
    assert out('int v = 2147483647; v = v + 1; printf("%d\\n", v);') == "-2147483648\n"


def test_compound_assignment_and_increments():
    assert out('int i = 5; int j = i++; int k = ++i; i *= 2; printf("%d %d %d\\n", i, j, k);') == "14 5 7\n"


def test_loops_break_continue():
    body = "int s = 0; for (int i = 0; i < 10; i++) { if (i == 7) break; if (i % 2) continue; s += i; }"
    body += ' int w = 0; while (w < 5) { w += 2; } printf("%d %d\\n", s, w);'
    assert out(body) == "12 6\n"


def test_switch_fallthrough():
    body = 'int r = 0; for (int k = 0; k < 4; k++) { switch (k) { case 0: r += 1; break; case 1: r += 10; '
    body += 'case 2: r += 100; break; default: r += 1000; } } printf("%d\\n", r);'
    assert out(body) == "1211\n"


def test_references_and_pointers():
    pre = "void set(int& r, int* p) { r = 4; *p = 5; p[1] = 6; }"
    assert out('int a = 0; int b[2]; set(a, b); printf("%d %d %d\\n", a, b[0], b[1]);', pre) == "4 5 6\n"


def test_pointer_arithmetic():
    assert out('int a[4] = {1, 2, 3, 4}; int* p = a + 1; p += 1; printf("%d %d\\n", *p, p[-1]);') == "3 2\n"


def test_heap_arrays():
    body = 'int* v = new int[3]; for (int i = 0; i < 3; i++) { v[i] = i * i; } printf("%d\\n", v[2]); delete[] v;'
    assert out(body) == "4\n"


def test_classes_and_methods():
    pre = "class P {\npublic:\n  int x;\n  int y;\n  void move(int d) { x += d; y -= d; }\n  int sum() const { return x + y; }\n};"
    assert out('P p; p.x = 1; p.y = 2; p.move(3); printf("%d %d\\n", p.x, p.sum());', pre) == "4 3\n"


def test_globals_and_recursion():
    pre = "int calls = 0;\nint fib(int n) { calls++; if (n < 2) return n; return fib(n - 1) + fib(n - 2); }"
    assert out('printf("%d %d\\n", fib(10), calls);', pre) == "55 177\n"


def test_math_builtins():
    assert out('printf("%.2f %.1f %d\\n", sqrt(2.0), fabs(-1.5), abs(-3));', "#include <cmath>") == "1.41 1.5 3\n"


def test_out_of_bounds_is_undefined():
    with pytest.raises(UndefinedBehavior):
        run("int main() { int a[2]; a[5] = 1; return 0; }")


def test_division_by_zero_is_undefined():
    with pytest.raises(UndefinedBehavior):
        run("int main() { int z = 0; return 3 / z; }")


def test_runaway_recursion_is_reported():
    with pytest.raises(RecursionLimit):
        run("int f(int n) { return f(n + 1); }\nint main() { return f(0); }")


def test_use_after_free_poisons_the_result():
    st = run("int main() { int* p = new int[3]; delete[] p; return p[0]; }")
    assert st["<return>"] == "<poison>"


def test_snapshot_names_locals_and_params():
    st = run("int main() { int a = 3; double b = 1.5; return a; }")
    assert st["main::a"] == 3 and st["main::b"] == 1.5 and st["<return>"] == 3


def test_entry_with_arguments():
    prog = Program.from_source("int sum(int* v, int n) { int s = 0; for (int i = 0; i < n; i++) s += v[i]; return s; }",
                               "s.cpp", entry="sum", args={"v": [1, 2, 3], "n": 3})
    assert sequential_execute(prog)["<return>"] == 6


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_runs(name):
    st = run(corpus_source(name))
    assert st["<return>"] == 0 and st["<stdout>"]


def test_quicksort_sorts():
    st = run(quicksort_source(64))
    assert st["<stdout>"].startswith("1 ")


def test_plan_does_not_change_sequential_meaning():
    """Running with the plan (tasks executed inline) gives the plain result."""
    src = corpus_source("coherency_sync")
    plain = run(src)
    prog = Program.from_source(src, "c.cpp")
    assert sequential_execute(prog) == plain

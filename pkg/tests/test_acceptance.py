"""Acceptance criteria 1-9, one test each.

Every test records a one-line verdict that is printed in the terminal
summary, so ``pytest tests/test_acceptance.py`` ends with a pass/fail line
per criterion.
"""
from __future__ import annotations

import contextlib
import os
import shutil
import subprocess
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apac.analysis import AccessMode, PlanOptions, classify_parameter
from apac.frontend import DeclaratorKind, ParamInfo, parse_translation_unit
from apac.sim import Program, check_stf, parallel_execute
from apac.throttle import DEFAULT_STRATEGY, UNLIMITED, MaxCount, MaxDepth
from apac.transform import transform_source, transform_unit
from support import ACCEPTANCE, GOLDEN_NAMES, corpus_names, corpus_source, golden_pair, normalized_tokens, quicksort_source


@contextlib.contextmanager
def criterion(k: int):
    """Records the verdict of criterion ``k``; ``detail`` is filled by the body."""
    box = {"detail": ""}
    try:
        yield box
    except pytest.skip.Exception as e:
        ACCEPTANCE[k] = ("SKIP", str(e))
        raise
    except BaseException as e:
        ACCEPTANCE[k] = ("FAIL", f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}")
        raise
    ACCEPTANCE[k] = (True, box["detail"])
    print(f"criterion {k}: PASS - {box['detail']}")


# 1 --------------------------------------------------------------------------


def test_criterion_1_golden_transforms():
    with criterion(1) as c:
        worst = 0.0
        for name in GOLDEN_NAMES:
            src, want = golden_pair(name)
            t0 = time.perf_counter()
            got = transform_source(src, f"{name}.cpp", "none").text
            elapsed = time.perf_counter() - t0
            worst = max(worst, elapsed)
            assert normalized_tokens(got) == normalized_tokens(want), f"{name} differs"
            assert elapsed < 1.0, f"{name} took {elapsed:.2f}s"
        c["detail"] = f"{len(GOLDEN_NAMES)}/5 golden pairs token-equal, slowest {worst * 1000:.0f} ms"


# 2 --------------------------------------------------------------------------

_seen = {"n": 0, "bad": 0}

param_infos = st.builds(
    ParamInfo,
    name=st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=12),
    base_type=st.sampled_from(["int", "double", "float", "char", "bool", "long", "unsigned int", "Cell"])
    | st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz", min_size=1, max_size=10),
    declarator=st.sampled_from(list(DeclaratorKind)),
    is_const_qualified=st.booleans(),
)


@settings(max_examples=10_000, deadline=None, database=None)
@given(param_infos)
def _classification_law(p):
    _seen["n"] += 1
    want_in = p.declarator is DeclaratorKind.BY_VALUE or p.is_const_qualified
    got = classify_parameter(p)
    if (got is AccessMode.IN) != want_in or got not in (AccessMode.IN, AccessMode.INOUT):
        _seen["bad"] += 1
    assert (got is AccessMode.IN) == want_in


def test_criterion_2_classification_law():
    with criterion(2) as c:
        _seen.update(n=0, bad=0)
        _classification_law()
        assert _seen["n"] >= 10_000, f"only {_seen['n']} cases ran"
        assert _seen["bad"] == 0
        c["detail"] = f"{_seen['n']} random ParamInfo cases, 0 counterexamples"


# 3 --------------------------------------------------------------------------

NO_TASK_UNITS = [
    # no calls at all, next to a function that does get a taskgroup
    golden_pair("parallel_region")[0],
    # only library calls
    "#include <cstdio>\n#include <cmath>\n"
    "double norm(double x, double y) { double r = sqrt(x * x + y * y); printf(\"%f\\n\", r); return r; }\n",
    # callee touches a global, so no call to it is taskified
    "int g = 0;\nvoid bump(int& v) { g += 1; v += g; }\n"
    "void caller(int& a) { bump(a); bump(a); }\n",
    # excluded callee stays a plain call
    "void work(int& v) { v += 1; }\nvoid loop(int& v) { for (int i = 0; i < 3; i++) { v += i; } }\n",
]


def test_criterion_3_no_task_functions_untouched():
    with criterion(3) as c:
        checked = 0
        for k, text in enumerate(NO_TASK_UNITS):
            tree = parse_translation_unit(text, f"unit{k}.cpp")
            res = transform_unit(tree, DEFAULT_STRATEGY)
            for func, fp in res.plan.functions.items():
                if fp.needs_taskgroup:
                    continue
                span = func.node.span
                # a unit-level prologue may be inserted before the function, never into it
                inside = [e for e in res.edits if span.start < e.anchor.end and e.anchor.start < span.end
                          and not (e.kind.value == "InsertBefore" and e.anchor.start == span.start)]
                assert not inside, f"{func.name} received {len(inside)} edits"
                assert text[span.start:span.end] in res.text, f"{func.name} text changed"
                checked += 1
            if not res.plan.any_taskgroup:
                assert res.edits == [] and res.text == text
        assert checked >= 5
        c["detail"] = f"{checked} task-free functions, 0 edits"


# 4 --------------------------------------------------------------------------


def test_criterion_4_stf_equivalence():
    with criterion(4) as c:
        names = corpus_names()
        assert len(names) >= 10 and "quicksort" in names and "md_toy" in names
        total = 0
        for name in names:
            prog = Program.from_source(corpus_source(name), f"{name}.cpp")
            rep = check_stf(prog, DEFAULT_STRATEGY)
            assert rep.ok, f"{name}: schedule diverged: {rep.mismatches[0][1]}"
            if not rep.exhaustive:
                assert rep.orders == 1000
            total += rep.orders
        c["detail"] = f"{len(names)} programs, {total} schedules, 0 divergences"


# 5 --------------------------------------------------------------------------


def _divergent(name: str, options: PlanOptions) -> bool:
    prog = Program.from_source(corpus_source(name), f"{name}.cpp", options=options)
    return not check_stf(prog, UNLIMITED).ok


def test_criterion_5_syncs_are_load_bearing():
    with criterion(5) as c:
        removed = 0
        for name in ("coherency_sync", "scope_promotion"):
            prog = Program.from_source(corpus_source(name), f"{name}.cpp")
            assert check_stf(prog, UNLIMITED).ok
            keys = [k for fp in prog.plan.functions.values() for k in fp.syncs]
            for key in keys:
                assert _divergent(name, PlanOptions(suppress_syncs=frozenset([key]))), f"{name}: {key} not needed"
                removed += 1
        # the cleanup task of the promoted scope local
        for mode in ("inline", "none"):
            assert _divergent("scope_promotion", PlanOptions(promotion=mode)), f"promotion={mode} did not diverge"
            removed += 1
        c["detail"] = f"{removed} deletions, each with a divergent schedule"


# 6 --------------------------------------------------------------------------


def test_criterion_6_depth_throttle():
    with criterion(6) as c:
        prog = Program.from_source(corpus_source("quicksort"), "quicksort.cpp")
        _, rec5 = parallel_execute(prog, MaxDepth(5))
        assert rec5.graph.max_depth <= 5
        assert rec5.graph.max_depth == 5  # the recursion is deep enough to reach the cap
        _, rec0 = parallel_execute(prog, MaxDepth(0))
        assert len(rec0.graph) == 1 and rec0.graph.edges == []
        c["detail"] = f"MaxDepth(5): {len(rec5.graph)} nodes, max depth {rec5.graph.max_depth}; MaxDepth(0): 1 node"


# 7 --------------------------------------------------------------------------


def test_criterion_7_count_throttle():
    with criterion(7) as c:
        runs = 0
        groups = 0
        for name in ("quicksort", "fib", "md_toy"):
            prog = Program.from_source(corpus_source(name), f"{name}.cpp")
            for limit in (1, 2, 4, 8):
                for seed in range(3):
                    _, rec = parallel_execute(prog, MaxCount(limit), policy="random", seed=seed)
                    trace = rec.count_trace
                    assert rec.final_count == 0
                    assert sum(e.kind == "inc" for e in trace) == sum(e.kind == "dec" for e in trace)
                    for e in trace:
                        if e.kind == "enter" and e.active:
                            assert e.value < limit
                            groups += 1
                    runs += 1
        c["detail"] = f"{runs} runs, counter back to 0 each time, {groups} activating groups all saw count < N"


# 8 --------------------------------------------------------------------------


def test_criterion_8_quicksort_speedup():
    with criterion(8) as c:
        t0 = time.perf_counter()
        prog = Program.from_source(quicksort_source(4096), "quicksort4096.cpp")

        def partition_length(fname, args):
            return float(args[1]) if fname == "partition" else 0.0

        state, rec = parallel_execute(prog, MaxDepth(5), cost=partition_length)
        g = rec.graph
        span, speedup = g.makespan(4)
        cp = g.critical_path()
        elapsed = time.perf_counter() - t0
        assert state["<stdout>"].startswith("1 ")  # the array came out sorted
        assert 1.5 <= speedup <= 4.0, speedup
        assert span >= cp - 1e-9 and span >= g.total_cost / 4 - 1e-9
        assert elapsed < 10.0, f"{elapsed:.1f}s"
        c["detail"] = (
            f"speedup {speedup:.2f} on 4 workers, makespan {span:g} >= critical path {cp:g}, {elapsed:.1f}s"
        )


# 9 --------------------------------------------------------------------------


def _toolchain() -> str | None:
    cxx = shutil.which("g++") or shutil.which("clang++")
    if cxx is None:
        return None
    probe = subprocess.run([cxx, "-fopenmp", "-x", "c++", "-", "-o", os.devnull],
                           input="int main(){\n#pragma omp parallel\n{}\nreturn 0;}\n",
                           capture_output=True, text=True)
    return cxx if probe.returncode == 0 else None


def _build_and_run(cxx: str, text: str, tmp_path, stem: str, openmp: bool) -> str:
    src = tmp_path / f"{stem}.cpp"
    exe = tmp_path / stem
    src.write_text(text)
    cmd = [cxx, "-O1", "-w", str(src), "-o", str(exe)] + (["-fopenmp"] if openmp else [])
    built = subprocess.run(cmd, capture_output=True, text=True)
    assert built.returncode == 0, f"{stem} did not compile:\n{built.stderr[:2000]}"
    env = dict(os.environ, OMP_NUM_THREADS="4")
    ran = subprocess.run([str(exe)], capture_output=True, text=True, env=env, timeout=60)
    assert ran.returncode == 0, f"{stem} exited with {ran.returncode}"
    return ran.stdout


def test_criterion_9_native_compile(tmp_path):
    with criterion(9) as c:
        cxx = _toolchain()
        if cxx is None:
            pytest.skip("no OpenMP-capable C++ toolchain")
        count = 0
        for name in corpus_names():
            text = corpus_source(name)
            want = _build_and_run(cxx, text, tmp_path, f"{name}_seq", openmp=False)
            for strategy in ("none", "depth:5", "count:4"):
                out = transform_source(text, f"{name}.cpp", strategy).text
                stem = f"{name}_{strategy.replace(':', '')}"
                assert _build_and_run(cxx, out, tmp_path, stem, openmp=True) == want, f"{stem} output differs"
                count += 1
        c["detail"] = f"{count} transformed builds with {os.path.basename(cxx)} -fopenmp, outputs equal"

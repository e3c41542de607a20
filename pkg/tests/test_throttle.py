"""Strategies and the text they contribute."""
from __future__ import annotations

import pytest

from apac.analysis import NameAllocator
from apac.throttle import (
    COUNT_VAR,
    DEFAULT_STRATEGY,
    DEPTH_VAR,
    UNLIMITED,
    Instrumentation,
    MaxCount,
    MaxDepth,
    ThrottleStrategy,
    parse_strategy,
)
from apac.transform import transform_source
from support import corpus_source


@pytest.mark.parametrize(
    "text, want",
    [("none", UNLIMITED), ("count:8", MaxCount(8)), ("depth:0", MaxDepth(0)), (" Depth:5 ", DEFAULT_STRATEGY),
     (None, DEFAULT_STRATEGY)],
)
def test_parse_strategy(text, want):
    assert parse_strategy(text) == want


@pytest.mark.parametrize("text", ["count:0", "depth:-1", "depth", "fast", "count:x"])
def test_parse_strategy_rejects(text):
    with pytest.raises(ValueError):
        parse_strategy(text)


def test_strategy_str_round_trips():
    for s in (UNLIMITED, MaxCount(3), MaxDepth(5)):
        assert parse_strategy(str(s)) == s


def test_none_takes_no_limit():
    with pytest.raises(ValueError):
        ThrottleStrategy("none", 3)


def test_unlimited_contributes_nothing():
    inst = Instrumentation(UNLIMITED, NameAllocator(()))
    assert inst.globals() == [] and inst.preamble("a") == [] and inst.if_clause("a") is None
    assert inst.before_task("a") == [] and inst.task_prologue() == [] and inst.task_epilogue("a") == []


def test_count_instrumentation_is_balanced():
    inst = Instrumentation(MaxCount(4), NameAllocator(()))
    assert inst.globals() == [f"static int {COUNT_VAR} = 0;"]
    assert inst.preamble("act")[-1] == "const bool act = apac_count_seen < 4;"
    inc = [ln for ln in inst.before_task("act") if "++" in ln]
    dec = [ln for ln in inst.task_epilogue("act") if "--" in ln]
    assert inc == [f"{COUNT_VAR}++;"] and dec == [f"{COUNT_VAR}--;"]


def test_depth_instrumentation():
    inst = Instrumentation(MaxDepth(2), NameAllocator(()))
    assert f"#pragma omp threadprivate({DEPTH_VAR})" in inst.globals()
    assert inst.preamble("act")[-1] == "const bool act = apac_depth_local < 2;"
    assert inst.firstprivate() == ["apac_depth_local"]
    assert inst.task_prologue()[-1] == f"{DEPTH_VAR} = apac_depth_local + 1;"
    assert inst.task_epilogue("act") == [f"{DEPTH_VAR} = apac_depth_saved;"]


def test_names_avoid_user_identifiers():
    inst = Instrumentation(MaxDepth(2), NameAllocator({DEPTH_VAR}))
    assert inst.depth_var != DEPTH_VAR and inst.depth_var.startswith(DEPTH_VAR)


@pytest.mark.parametrize("strategy", ["count:4", "depth:5"])
def test_every_task_carries_the_if_clause(strategy):
    out = transform_source(corpus_source("quicksort"), "q.cpp", strategy).text
    tasks = [ln for ln in out.splitlines() if "#pragma omp task " in ln]
    assert tasks and all("if(apac_active" in ln for ln in tasks)


def test_none_has_no_activation():
    out = transform_source(corpus_source("quicksort"), "q.cpp", "none").text
    assert "apac_active" not in out and "if(" not in out.replace("if (", "")

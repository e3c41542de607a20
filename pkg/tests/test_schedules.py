"""Simulated task runtime and schedule exploration."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apac.analysis import PlanOptions
from apac.sim import (
    Program,
    ScheduleMismatch,
    check_stf,
    enumerate_schedules,
    extract_task_graph,
    parallel_execute,
    sequential_execute,
)
from apac.throttle import UNLIMITED, MaxCount, MaxDepth
from support import corpus_source

TWO_CHAINS = """
void inc(int& v, int k) { v = v * 3 + k; }
int main() {
    int a = 1;
    int b = 2;
    inc(a, 1);
    inc(b, 2);
    inc(a, 3);
    inc(b, 4);
    int c = a + b;
    return c - c;
}
"""


def test_graph_of_two_chains():
    g = extract_task_graph(Program.from_source(TWO_CHAINS, "t.cpp"))
    labels = [nd.label for nd in g.nodes]
    assert sum(lbl.startswith("inc") for lbl in labels) == 4
    kinds = g.edge_kinds()
    assert kinds.get("WAW", 0) + kinds.get("RAW", 0) >= 2
    # a and b chains are independent: 4 tasks, 2 chains of 2 give 6 interleavings
    assert g.is_acyclic()


def test_every_schedule_of_two_chains_matches():
    rep = check_stf(Program.from_source(TWO_CHAINS, "t.cpp"))
    assert rep.ok and rep.exhaustive and rep.orders >= 6


def test_missing_sync_is_detected():
    prog = Program.from_source(corpus_source("coherency_sync"), "c.cpp")
    key = next(k for fp in prog.plan.functions.values() for k in fp.syncs)
    broken = Program.from_source(corpus_source("coherency_sync"), "c.cpp",
                                 options=PlanOptions(suppress_syncs=frozenset([key])))
    rep = check_stf(broken, stop_after=1)
    assert not rep.ok
    order, diff = rep.mismatches[0]
    assert diff


def test_parallel_fifo_equals_sequential_across_strategies():
    prog = Program.from_source(corpus_source("md_toy"), "md.cpp")
    seq = sequential_execute(prog)
    for strategy in (UNLIMITED, MaxDepth(0), MaxDepth(2), MaxCount(1), MaxCount(3)):
        state, _ = parallel_execute(prog, strategy)
        assert seq.diff(state) == {}, strategy


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_random_policy_matches_sequential(seed):
    prog = Program.from_source(corpus_source("nested_calls"), "n.cpp")
    state, _ = parallel_execute(prog, UNLIMITED, policy="random", seed=seed)
    assert sequential_execute(prog).diff(state) == {}


def test_random_policy_is_seeded():
    prog = Program.from_source(corpus_source("fib"), "fib.cpp")
    _, r1 = parallel_execute(prog, UNLIMITED, policy="random", seed=7)
    _, r2 = parallel_execute(prog, UNLIMITED, policy="random", seed=7)
    assert r1.order == r2.order


def test_replaying_a_recorded_order():
    prog = Program.from_source(TWO_CHAINS, "t.cpp")
    _, rec = parallel_execute(prog)
    orders, _ = enumerate_schedules(rec.graph)
    last = orders[-1]
    _, again = parallel_execute(prog, order=last, decisions=rec.decisions)
    assert again.order == last
    assert rec.graph.count_orders(10_000) == len(orders)


def test_impossible_order_is_rejected():
    prog = Program.from_source(TWO_CHAINS, "t.cpp")
    _, rec = parallel_execute(prog)
    order = [nd.id for nd in rec.graph.nodes][::-1]
    with pytest.raises(ScheduleMismatch):
        parallel_execute(prog, order=order, decisions=rec.decisions)


def test_depth_zero_runs_everything_inline():
    g = extract_task_graph(Program.from_source(corpus_source("fib"), "fib.cpp"), MaxDepth(0))
    assert len(g) == 1 and g.max_depth == 0


@pytest.mark.parametrize("limit", [1, 2, 3])
def test_depth_cap(limit):
    g = extract_task_graph(Program.from_source(corpus_source("fib"), "fib.cpp"), MaxDepth(limit))
    assert g.max_depth == limit


def test_count_cap_trace():
    prog = Program.from_source(corpus_source("fib"), "fib.cpp")
    for n in (1, 2, 5):
        _, rec = parallel_execute(prog, MaxCount(n))
        assert rec.final_count == 0
        enters = [e for e in rec.count_trace if e.kind == "enter"]
        assert enters and all((e.value < n) == e.active for e in enters)


def test_op_cost_model():
    prog = Program.from_source(corpus_source("quicksort"), "q.cpp")
    g = extract_task_graph(prog, MaxDepth(3), cost="ops")
    assert g.total_cost > len(g)
    assert g.makespan(4)[0] >= g.critical_path()


def test_sampling_when_orders_exceed_limit():
    prog = Program.from_source(corpus_source("quicksort"), "q.cpp")
    rep = check_stf(prog, MaxDepth(2), limit=10, samples=20)
    assert rep.ok and not rep.exhaustive and rep.orders == 20

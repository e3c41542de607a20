"""Sequential and task-parallel execution, graph extraction and schedule checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..analysis import analyze
from ..analysis.plan import PlanOptions, UnitPlan
from ..frontend import parse_translation_unit as parse
from ..frontend import nodes as n
from ..frontend.symbols import Symbols
from ..throttle import UNLIMITED, ThrottleStrategy
from . import kernels
from .graph import TaskGraph
from .interp import Interpreter
from .memory import MemoryState
from .runtime import RunRecord, Runtime

EXHAUSTIVE_LIMIT = 5040
SAMPLES = 1000


@dataclass
class Program:
    """A parsed unit with its plan, ready to run either way."""

    tree: n.TranslationUnit
    symbols: Symbols
    plan: UnitPlan
    entry: str = "main"
    args: dict = field(default_factory=dict)

    @classmethod
    def from_source(cls, text: str, name: str = "<input>", entry: str = "main",
                    options: Optional[PlanOptions] = None, args: Optional[dict] = None) -> "Program":
        tree = parse(text, name)
        syms = Symbols(tree)
        return cls(tree, syms, analyze(tree, syms, options), entry, dict(args or {}))


def sequential_execute(prog: Program) -> MemoryState:
    """Runs the original program, ignoring every annotation."""
    interp = Interpreter(prog.tree, prog.symbols)
    _, state = interp.call_entry(prog.entry, prog.args)
    return state


def parallel_execute(prog: Program, strategy: ThrottleStrategy = UNLIMITED, policy: str = "fifo",
                     seed: int = 0, order: Optional[list] = None, decisions: Optional[dict] = None,
                     cost="unit", record: bool = True) -> tuple[MemoryState, Optional[RunRecord]]:
    """Runs the planned task program under the simulated runtime.

    With ``record=False`` the graph is not built (schedule replays only
    need the final state).
    """
    rt = Runtime(strategy, policy, seed, order, decisions, cost)
    interp = Interpreter(prog.tree, prog.symbols, prog.plan, rt, count_ops=(cost == "ops"))
    out = rt.run(prog.entry, lambda: interp.call_entry(prog.entry, prog.args))
    return out[1], (rt.record() if record else None)


def extract_task_graph(prog: Program, strategy: ThrottleStrategy = UNLIMITED, cost="unit") -> TaskGraph:
    return parallel_execute(prog, strategy, cost=cost)[1].graph


def enumerate_schedules(graph: TaskGraph, limit: int = EXHAUSTIVE_LIMIT, samples: int = SAMPLES,
                        seed: int = 0) -> tuple[list, bool]:
    """Orders to test: all of them when there are at most ``limit``, else seeded samples.

    Returns (orders as node-id lists, exhaustive flag).
    """
    size = len(graph)
    ids = [nd.id for nd in graph.nodes]
    if graph.count_orders(limit) <= limit:
        orders = kernels.enumerate_linear_extensions(size, graph.preds, graph.succs, limit)
        return [[ids[i] for i in o] for o in orders], True
    out = []
    for k in range(samples):
        o = kernels.random_linear_extension(size, graph.preds, graph.succs, seed * 1_000_003 + k)
        out.append([ids[i] for i in o])
    return out, False


@dataclass
class STFReport:
    """Outcome of comparing every tested schedule against the sequential run."""

    nodes: int
    edges: int
    orders: int
    exhaustive: bool
    sequential: MemoryState
    mismatches: list = field(default_factory=list)  # (order, diff)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def check_stf(prog: Program, strategy: ThrottleStrategy = UNLIMITED, limit: int = EXHAUSTIVE_LIMIT,
              samples: int = SAMPLES, seed: int = 0, stop_after: int = 1) -> STFReport:
    """Replays the extracted graph's schedules and compares final states.

    Throttling decisions of the reference run are replayed as well, so every
    schedule drives the same task structure.
    """
    seq = sequential_execute(prog)
    _, ref = parallel_execute(prog, strategy)
    graph = ref.graph
    orders, exhaustive = enumerate_schedules(graph, limit, samples, seed)
    report = STFReport(len(graph), len(graph.edges), len(orders), exhaustive, seq)
    for order in orders:
        state, _ = parallel_execute(prog, strategy, order=order, decisions=ref.decisions,
                                    record=False)
        d = seq.diff(state)
        if d:
            report.mismatches.append((order, d))
            if len(report.mismatches) >= stop_after:
                break
    return report

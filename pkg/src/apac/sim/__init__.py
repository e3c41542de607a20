"""Task-graph simulator: interpreter, runtime, graphs and schedule checks."""
from .graph import EDGE_KINDS, InvalidSchedule, TaskGraph, TaskNode, graph_from_edges
from .interp import Interpreter
from .kernels import BACKEND
from .memory import InterpreterError, MemoryState, RecursionLimit, UndefinedBehavior
from .runtime import RunRecord, Runtime, ScheduleMismatch
from .schedules import (
    Program,
    STFReport,
    check_stf,
    enumerate_schedules,
    extract_task_graph,
    parallel_execute,
    sequential_execute,
)

__all__ = [
    "BACKEND", "EDGE_KINDS", "Interpreter", "InterpreterError", "InvalidSchedule", "MemoryState",
    "Program", "RecursionLimit", "RunRecord", "Runtime", "STFReport", "ScheduleMismatch",
    "TaskGraph", "TaskNode", "UndefinedBehavior", "check_stf", "enumerate_schedules",
    "extract_task_graph", "graph_from_edges", "parallel_execute", "sequential_execute",
]

"""Extracted task graphs and their cost analyses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import kernels

# lower wins when several reasons connect the same pair of nodes
EDGE_PRIORITY = {"Seq": 0, "Spawn": 1, "RAW": 2, "WAW": 3, "WAR": 4, "Sync": 5}
EDGE_KINDS = tuple(EDGE_PRIORITY)


class InvalidSchedule(ValueError):
    pass


@dataclass(eq=False)
class TaskNode:
    id: str
    label: str
    reads: frozenset = frozenset()
    writes: frozenset = frozenset()
    depth: int = 0
    cost: float = 0.0
    key: tuple = field(default=(), repr=False)


class TaskGraph:
    def __init__(self, nodes: Iterable[TaskNode], edges: Iterable[tuple]):
        self.nodes: list[TaskNode] = list(nodes)
        self.index = {nd.id: i for i, nd in enumerate(self.nodes)}
        self.edges: list[tuple] = sorted(
            set(edges), key=lambda e: (self.index[e[0]], self.index[e[1]], EDGE_PRIORITY[e[2]])
        )
        n = len(self.nodes)
        self.preds: list[list[int]] = [[] for _ in range(n)]
        self.succs: list[list[int]] = [[] for _ in range(n)]
        for a, b, _ in self.edges:
            i, j = self.index[a], self.index[b]
            self.succs[i].append(j)
            self.preds[j].append(i)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, nid: str) -> TaskNode:
        return self.nodes[self.index[nid]]

    @property
    def costs(self) -> list[float]:
        return [float(nd.cost) for nd in self.nodes]

    @property
    def total_cost(self) -> float:
        return sum(self.costs)

    @property
    def max_depth(self) -> int:
        return max((nd.depth for nd in self.nodes), default=0)

    def task_count(self) -> int:
        """Number of distinct tasks (fragments of one task share a key path)."""
        return len({nd.key[0] if nd.key else nd.id for nd in self.nodes})

    def edge_kinds(self) -> dict:
        out: dict = {}
        for _, _, k in self.edges:
            out[k] = out.get(k, 0) + 1
        return out

    def is_acyclic(self) -> bool:
        return kernels.topological_order(len(self), self.succs) is not None

    def check_order(self, order: list[str]) -> None:
        """Raise :class:`InvalidSchedule` unless ``order`` is a topological order."""
        if sorted(order) != sorted(nd.id for nd in self.nodes):
            raise InvalidSchedule("order is not a permutation of the graph's nodes")
        pos = {nid: k for k, nid in enumerate(order)}
        for a, b, kind in self.edges:
            if pos[a] > pos[b]:
                raise InvalidSchedule(f"{kind} edge {a} -> {b} violated")

    def count_orders(self, limit: int) -> int:
        """Number of topological orders, capped at ``limit + 1``."""
        return kernels.count_linear_extensions(len(self), self.preds, self.succs, limit)

    def critical_path(self) -> float:
        return kernels.longest_path(len(self), self.preds, self.succs, self.costs)

    def makespan(self, workers: int) -> tuple[float, float]:
        """Greedy FIFO list scheduling; returns (makespan, speedup)."""
        if workers < 1:
            raise ValueError("workers must be positive")
        span = kernels.list_schedule(len(self), self.preds, self.succs, self.costs, workers)
        total = self.total_cost
        return span, (total / span if span > 0 else 1.0)

    def to_dot(self, name: str = "tasks") -> str:
        lines = [f"digraph {name} {{", "  node [shape=box];"]
        for nd in self.nodes:
            label = f"{nd.label} depth={nd.depth}".replace('"', '\\"')
            lines.append(f'  "{nd.id}" [label="{label}"];')
        for a, b, kind in self.edges:
            style = ', style=dashed' if kind in ("Seq", "Spawn") else ""
            lines.append(f'  "{a}" -> "{b}" [label="{kind}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "id": nd.id,
                    "label": nd.label,
                    "depth": nd.depth,
                    "cost": nd.cost,
                    "reads": sorted(nd.reads),
                    "writes": sorted(nd.writes),
                }
                for nd in self.nodes
            ],
            "edges": [{"from": a, "to": b, "kind": k} for a, b, k in self.edges],
        }


def graph_from_edges(n: int, edges: Iterable[tuple], costs: Optional[list] = None) -> TaskGraph:
    """Small synthetic graphs over node ids ``"0" .. str(n-1)``."""
    costs = costs or [1.0] * n
    nodes = [TaskNode(str(i), f"t{i}", cost=costs[i], key=((i,), 0)) for i in range(n)]
    es = [(str(a), str(b), e[2] if len(e) > 2 else "RAW") for e in edges for a, b in [e[:2]]]
    return TaskGraph(nodes, es)

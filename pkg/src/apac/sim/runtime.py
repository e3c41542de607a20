"""Task runtime of the simulator.

Each task runs in its own greenlet. A task's execution is cut into
fragments: a fragment ends when the task spawns a child or waits on
something it has to wait for. Fragments are the nodes of the extracted
graph and the unit the scheduler picks, so any order over the graph is an
interleaving the OpenMP runtime could have produced.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from greenlet import greenlet

from ..throttle import ThrottleStrategy, UNLIMITED
from .graph import EDGE_PRIORITY, TaskGraph, TaskNode


class ScheduleMismatch(RuntimeError):
    """A replayed order does not fit the dynamic task structure."""


class Task:
    __slots__ = (
        "path", "depth", "parent", "owner", "label", "inline", "nchildren", "unsynced",
        "reads", "writes", "read_names", "write_names", "done", "last_key", "glet", "seg",
        "groups", "enclosing", "ngroups", "counted", "first_key", "resume", "waiters",
    )

    def __init__(self, path: tuple, depth: int, parent: Optional["Task"], label: str):
        self.path = path
        self.depth = depth
        self.parent = parent
        self.owner = self
        self.label = label
        self.inline = False
        self.nchildren = 0
        self.unsynced: list = []
        self.reads = frozenset()
        self.writes = frozenset()
        self.read_names: tuple = ()
        self.write_names: tuple = ()
        self.done = False
        self.last_key = None
        self.first_key = None
        self.glet = None
        self.seg = 0
        self.groups: list = []  # open taskgroups, innermost last
        self.enclosing: tuple = ()  # groups of ancestors that wait for this task
        self.ngroups = 0
        self.counted = False
        self.resume: Optional["Task"] = None  # logical task to restore when resumed
        self.waiters: list = []  # fragments waiting for this task to finish

    @property
    def name(self) -> str:
        return ".".join(map(str, self.path))


class Group:
    __slots__ = ("owner", "members", "active", "depth_local", "key")

    def __init__(self, owner: Task, active: bool, depth_local: int, key: tuple):
        self.owner = owner
        self.members: list = []
        self.active = active
        self.depth_local = depth_local
        self.key = key


class _Fragment:
    __slots__ = ("key", "task", "preds", "cost", "seq", "done", "ops0", "unmet", "waiters", "nid")

    def __init__(self, key, task: Task, preds: list, seq: int):
        self.key = key
        self.task = task
        self.preds = preds  # (fragment key | Task, kind)
        self.cost = 0.0
        self.seq = seq
        self.done = False
        self.ops0 = 0
        self.unmet = 0
        self.waiters: list = []
        self.nid = _node_id(key)


@dataclass
class CountEvent:
    kind: str  # enter | inc | dec
    value: int  # counter value observed (enter) or after the update
    active: Optional[bool] = None
    key: tuple = ()


@dataclass
class RunRecord:
    graph: TaskGraph
    order: list  # node ids in execution order
    decisions: dict  # group key -> activation
    count_trace: list = field(default_factory=list)
    final_count: int = 0


def _conflict(u: Task, v: Task) -> Optional[str]:
    if u.writes & v.reads:
        return "RAW"
    if u.writes & v.writes:
        return "WAW"
    if u.reads & v.writes:
        return "WAR"
    return None


class Runtime:
    """Scheduler and bookkeeping for one run.

    ``policy`` is ``"fifo"`` or ``"random"``; ``order`` replays a fixed
    fragment order instead. ``cost`` is ``"unit"``, ``"ops"`` or a callable
    ``(function name, argument values) -> cost`` charged to the running
    fragment on every call.
    """

    def __init__(
        self,
        strategy: ThrottleStrategy = UNLIMITED,
        policy: str = "fifo",
        seed: int = 0,
        order: Optional[list] = None,
        decisions: Optional[dict] = None,
        cost="unit",
    ):
        self.strategy = strategy
        self.policy = policy
        self.rng = random.Random(seed)
        self.replay = list(order) if order is not None else None
        self.forced = decisions
        self.cost_model = cost
        self.call_hook: Optional[Callable] = cost if callable(cost) else None
        self.ops = 0
        self.count = 0
        self.count_trace: list[CountEvent] = []
        self.decisions: dict = {}
        self.fragments: dict = {}
        self.ready: dict = {}  # node id -> fragment whose predecessors all finished
        self.npending = 0
        self.executed: list = []
        self.current: Optional[Task] = None
        self.frag: Optional[_Fragment] = None
        self._seq = 0
        self.main = None
        self.tasks: list[Task] = []

    # ------------------------------------------------------------ fragments

    def _new_fragment(self, task: Task, preds: list) -> _Fragment:
        key = (task.path, task.seg)
        task.seg += 1
        f = _Fragment(key, task, preds, self._seq)
        self._seq += 1
        self.fragments[key] = f
        self.npending += 1
        for p, _ in preds:
            src = p if isinstance(p, Task) else self.fragments[p]
            if not src.done:
                f.unmet += 1
                src.waiters.append(f)
        if f.unmet == 0:
            self.ready[f.nid] = f
        return f

    def _close_fragment(self) -> _Fragment:
        f = self.frag
        if self.cost_model == "ops":
            f.cost += self.ops - f.ops0
        f.done = True
        return f

    def _release(self, src) -> None:
        for w in src.waiters:
            w.unmet -= 1
            if w.unmet == 0:
                self.ready[w.nid] = w
        src.waiters = []

    def _yield(self) -> None:
        self.current.owner.resume = self.current
        self.main.switch()

    def add_cost(self, c: float) -> None:
        self.frag.cost += c

    def on_call(self, fname: str, args: list) -> None:
        if self.call_hook is not None and self.frag is not None:
            self.frag.cost += self.call_hook(fname, args)

    # ------------------------------------------------------------ run

    def run(self, entry_label: str, body: Callable[[], object]) -> object:
        root = Task((), 0, None, entry_label)
        self.tasks.append(root)
        result = {}

        def root_main():
            result["value"] = body()
            root.done = True
            root.last_key = self._close_fragment().key

        root.glet = greenlet(root_main)
        self.main = greenlet.getcurrent()
        root.glet.parent = self.main
        f0 = self._new_fragment(root, [])
        root.first_key = f0.key
        step = 0
        while self.npending:
            ready = self.ready
            if self.replay is not None:
                if step >= len(self.replay):
                    raise ScheduleMismatch("order ended before the run")
                want = self.replay[step]
                f = ready.get(want)
                if f is None:
                    raise ScheduleMismatch(f"fragment {want} not ready at step {step}")
            elif not ready:
                raise RuntimeError("deadlock: no ready fragment")
            elif self.policy == "random":
                f = list(ready.values())[self.rng.randrange(len(ready))]
            else:
                f = min(ready.values(), key=lambda r: r.seq)
            step += 1
            del ready[f.nid]
            self.npending -= 1
            self.executed.append(f.key)
            self.frag = f
            f.ops0 = self.ops
            if self.cost_model == "unit" and f.key[1] == 0:
                f.cost += 1
            task = f.task
            self.current = task.resume or task
            task.glet.switch()
            self.current = None
            self._release(f)
            if task.done:
                self._release(task)
        if self.replay is not None and step != len(self.replay):
            raise ScheduleMismatch("run ended before the order")
        return result.get("value")

    # ------------------------------------------------------------ groups

    def group_begin(self) -> Group:
        t = self.current
        key = (t.path, t.ngroups)
        t.ngroups += 1
        s = self.strategy
        depth_local = t.depth
        if s.kind == "depth":
            active = depth_local < s.limit
        elif s.kind == "count":
            seen = self.count
            active = seen < s.limit
            if self.forced is not None and key in self.forced:
                active = self.forced[key]
            self.count_trace.append(CountEvent("enter", seen, active, key))
        else:
            active = True
        self.decisions[key] = active
        g = Group(t, active, depth_local, key)
        t.groups.append(g)
        return g

    def group_end(self, g: Group) -> None:
        t = self.current
        assert t.groups and t.groups[-1] is g, "taskgroups must nest"
        t.groups.pop()
        members = [m for m in g.members if not m.inline]
        ids = {id(m) for m in g.members}
        t.unsynced = [u for u in t.unsynced if id(u) not in ids]
        if members:
            self._wait(members, "Sync")

    def taskwait(self) -> None:
        t = self.current
        kids = [k for k in t.unsynced if not k.inline]
        t.unsynced = []
        if kids:
            self._wait(kids, "Sync")

    def _wait(self, tasks: list, kind: str) -> None:
        t = self.current
        owner = t.owner
        cur = self._close_fragment()
        preds = [(cur.key, "Seq")] + [(k, kind) for k in tasks]
        self._new_fragment(owner, preds)
        self._yield()

    # ------------------------------------------------------------ tasks

    def spawn(
        self,
        label: str,
        reads: frozenset,
        writes: frozenset,
        read_names: tuple,
        write_names: tuple,
        body: Callable[[], None],
        active: bool,
        depth: int,
    ) -> None:
        parent = self.current
        idx = parent.nchildren
        parent.nchildren += 1
        child = Task(parent.path + (idx,), depth, parent, label)
        child.reads = reads - writes
        child.writes = writes
        child.read_names = read_names
        child.write_names = write_names
        enclosing = tuple(parent.groups) + parent.enclosing
        child.enclosing = enclosing
        for g in enclosing:
            g.members.append(child)
        self.tasks.append(child)
        deps = []
        for u in parent.unsynced:
            if u.inline:
                continue  # finished before this task existed
            kind = _conflict(u, child)
            if kind is not None:
                deps.append((u, kind))
        if not active:
            self._run_inline(child, body, deps)
            parent.unsynced.append(child)
            return
        if self.strategy.kind == "count":
            self.count += 1
            child.counted = True
            self.count_trace.append(CountEvent("inc", self.count, key=child.path))
        parent.unsynced.append(child)

        def task_main():
            body()
            if child.counted:
                self.count -= 1
                self.count_trace.append(CountEvent("dec", self.count, key=child.path))
            child.done = True
            child.last_key = self._close_fragment().key

        child.glet = greenlet(task_main, parent=self.main)
        cur = self._close_fragment()
        first = self._new_fragment(child, [(cur.key, "Spawn")] + deps)
        child.first_key = first.key
        self._new_fragment(parent.owner, [(cur.key, "Seq")])
        self._yield()

    def _run_inline(self, child: Task, body: Callable[[], None], deps: list) -> None:
        """Undeferred task: waits for its dependences, then runs in place."""
        parent = self.current
        waiting = [(u, k) for u, k in deps if not u.inline]
        if waiting:
            cur = self._close_fragment()
            self._new_fragment(parent.owner, [(cur.key, "Seq")] + waiting)
            self._yield()
        child.owner = parent.owner
        child.inline = True
        self.current = child
        try:
            body()
        finally:
            self.current = parent
        child.done = True

    # ------------------------------------------------------------ graph

    def record(self) -> RunRecord:
        nodes = []
        edges: dict = {}
        for f in sorted(self.fragments.values(), key=lambda r: r.seq):
            t = f.task
            first = f.key[1] == 0
            nodes.append(
                TaskNode(
                    id=f.nid,
                    label=t.label if first else f"{t.label}#{f.key[1]}",
                    reads=frozenset(t.read_names) - frozenset(t.write_names) if first else frozenset(),
                    writes=frozenset(t.write_names) if first else frozenset(),
                    depth=t.depth,
                    cost=f.cost,
                    key=f.key,
                )
            )
            for p, kind in f.preds:
                src = self.fragments[p.last_key] if isinstance(p, Task) else self.fragments[p]
                pair = (src.nid, f.nid)
                old = edges.get(pair)
                if old is None or EDGE_PRIORITY[kind] < EDGE_PRIORITY[old]:
                    edges[pair] = kind
        graph = TaskGraph(nodes, [(a, b, k) for (a, b), k in edges.items()])
        return RunRecord(
            graph,
            [_node_id(k) for k in self.executed],
            dict(self.decisions),
            list(self.count_trace),
            self.count,
        )


def _node_id(key: tuple) -> str:
    path, seg = key
    return f"{'.'.join(map(str, path)) or 'r'}:{seg}"

"""Pure-Python graph kernels (fallback for the compiled module).

Graphs are given as node count plus predecessor and successor index lists.
"""
from __future__ import annotations

import heapq
from collections import deque

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of splitmix64: returns (new state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def topological_order(n, succs):
    indeg = [0] * n
    for i in range(n):
        for j in succs[i]:
            indeg[j] += 1
    queue = deque(i for i in range(n) if indeg[i] == 0)
    out = []
    while queue:
        i = queue.popleft()
        out.append(i)
        for j in succs[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    return out if len(out) == n else None


def enumerate_linear_extensions(n, preds, succs, limit):
    """All topological orders if there are at most ``limit``, else ``limit + 1`` of them."""
    indeg = [len(p) for p in preds]
    ready = [i for i in range(n) if indeg[i] == 0]
    out = []
    cur = []
    cap = limit + 1

    def rec():
        if len(out) >= cap:
            return
        if len(cur) == n:
            out.append(list(cur))
            return
        for k in range(len(ready)):
            v = ready[k]
            if v < 0:
                continue
            ready[k] = -1
            cur.append(v)
            added = 0
            for s in succs[v]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
                    added += 1
            rec()
            for _ in range(added):
                ready.pop()
            for s in succs[v]:
                indeg[s] += 1
            cur.pop()
            ready[k] = v
            if len(out) >= cap:
                return

    rec()
    return out


def count_linear_extensions(n, preds, succs, limit):
    indeg = [len(p) for p in preds]
    ready = [i for i in range(n) if indeg[i] == 0]
    cap = limit + 1
    count = 0

    def rec(placed):
        nonlocal count
        if count >= cap:
            return
        if placed == n:
            count += 1
            return
        for k in range(len(ready)):
            v = ready[k]
            if v < 0:
                continue
            ready[k] = -1
            added = 0
            for s in succs[v]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    ready.append(s)
                    added += 1
            rec(placed + 1)
            for _ in range(added):
                ready.pop()
            for s in succs[v]:
                indeg[s] += 1
            ready[k] = v
            if count >= cap:
                return

    rec(0)
    return count


def random_linear_extension(n, preds, succs, seed):
    """Topological order built by uniform choice among ready nodes."""
    indeg = [len(p) for p in preds]
    ready = [i for i in range(n) if indeg[i] == 0]
    state = seed & MASK64
    out = []
    while ready:
        state, r = splitmix64(state)
        k = r % len(ready)
        v = ready[k]
        ready[k] = ready[-1]
        ready.pop()
        out.append(v)
        for s in succs[v]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    return out


def list_schedule(n, preds, succs, costs, workers):
    """Makespan of greedy list scheduling with a FIFO ready queue."""
    indeg = [len(p) for p in preds]
    ready = deque(i for i in range(n) if indeg[i] == 0)
    running = []
    free = workers
    t = 0.0
    finished = 0
    while finished < n:
        while free and ready:
            v = ready.popleft()
            heapq.heappush(running, (t + costs[v], v))
            free -= 1
        if not running:
            raise ValueError("graph has a cycle")
        t, v = heapq.heappop(running)
        free += 1
        finished += 1
        for s in succs[v]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    return t


def longest_path(n, preds, succs, costs):
    order = topological_order(n, succs)
    if order is None:
        raise ValueError("graph has a cycle")
    finish = [0.0] * n
    best = 0.0
    for v in order:
        start = max((finish[p] for p in preds[v]), default=0.0)
        finish[v] = start + costs[v]
        if finish[v] > best:
            best = finish[v]
    return best

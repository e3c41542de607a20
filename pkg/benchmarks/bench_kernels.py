"""Compiled vs pure-Python graph kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends run on the same graphs; results are checked for equality
before any timing is reported.
"""
from __future__ import annotations

import argparse
import random
import sys
import timeit

from apac.sim import _kernels_py

try:
    from apac.sim import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def random_dag(n: int, p: float, seed: int):
    rng = random.Random(seed)
    preds = [[] for _ in range(n)]
    succs = [[] for _ in range(n)]
    for j in range(n):
        for i in range(j):
            if rng.random() < p:
                succs[i].append(j)
                preds[j].append(i)
    costs = [float(rng.randint(1, 20)) for _ in range(n)]
    return n, preds, succs, costs


def fork_join(depth: int):
    """Binary spawn tree with a join per level, shaped like a recursive sort."""
    preds, succs, costs = [], [], []

    def node(c):
        preds.append([])
        succs.append([])
        costs.append(float(c))
        return len(costs) - 1

    def edge(a, b):
        succs[a].append(b)
        preds[b].append(a)

    def build(d, size):
        head = node(size)
        if d == 0:
            return head, head
        l0, l1 = build(d - 1, size // 2)
        r0, r1 = build(d - 1, size // 2)
        join = node(1)
        edge(head, l0)
        edge(head, r0)
        edge(l1, join)
        edge(r1, join)
        return head, join

    build(depth, 4096)
    return len(costs), preds, succs, costs


CASES = [
    ("count_linear_extensions", "small dag", lambda k, g: k.count_linear_extensions(g[0], g[1], g[2], 5040),
     random_dag(14, 0.25, 1)),
    ("enumerate_linear_extensions", "small dag",
     lambda k, g: k.enumerate_linear_extensions(g[0], g[1], g[2], 5040), random_dag(12, 0.3, 2)),
    ("random_linear_extension", "dag n=2000",
     lambda k, g: k.random_linear_extension(g[0], g[1], g[2], 7), random_dag(2000, 0.004, 3)),
    ("list_schedule", "dag n=2000 w=4", lambda k, g: k.list_schedule(g[0], g[1], g[2], g[3], 4),
     random_dag(2000, 0.004, 3)),
    ("list_schedule", "fork-join d=12 w=4", lambda k, g: k.list_schedule(g[0], g[1], g[2], g[3], 4),
     fork_join(12)),
    ("longest_path", "fork-join d=12", lambda k, g: k.longest_path(g[0], g[1], g[2], g[3]), fork_join(12)),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'kernel':30} {'input':22} {'python ms':>10} {'cython ms':>10} {'ratio':>7}")
    for name, label, call, graph in CASES:
        if call(_kernels_py, graph) != call(_kernels_c, graph):
            print(f"{name}: backends disagree on {label}")
            return 1
        times = {}
        for tag, mod in (("py", _kernels_py), ("c", _kernels_c)):
            t = timeit.Timer(lambda: call(mod, graph))
            loops, _ = t.autorange()
            times[tag] = min(t.repeat(args.repeat, loops)) / loops * 1e3
        print(f"{name:30} {label:22} {times['py']:10.3f} {times['c']:10.3f} {times['py'] / times['c']:6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

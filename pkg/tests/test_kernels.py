"""Compiled kernels agree with the pure-Python fallback."""
from __future__ import annotations

import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apac.sim import _kernels_py
from apac.sim import kernels

compiled = pytest.importorskip("apac.sim._kernels", reason="compiled extension not built")


@st.composite
def graphs(draw):
    n = draw(st.integers(0, 9))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    perm = draw(st.permutations(range(n)))
    preds = [[] for _ in range(n)]
    succs = [[] for _ in range(n)]
    for a, b in edges:
        succs[perm[a]].append(perm[b])
        preds[perm[b]].append(perm[a])
    costs = draw(st.lists(st.integers(0, 20).map(float), min_size=n, max_size=n))
    return n, preds, succs, costs


@settings(max_examples=300, deadline=None)
@given(graphs(), st.integers(1, 500))
def test_linear_extensions_agree(g, limit):
    n, preds, succs, _ = g
    assert compiled.count_linear_extensions(n, preds, succs, limit) == _kernels_py.count_linear_extensions(
        n, preds, succs, limit
    )
    assert compiled.enumerate_linear_extensions(n, preds, succs, limit) == _kernels_py.enumerate_linear_extensions(
        n, preds, succs, limit
    )


@settings(max_examples=300, deadline=None)
@given(graphs(), st.integers(0, 2**63), st.integers(1, 5))
def test_sampling_and_scheduling_agree(g, seed, workers):
    n, preds, succs, costs = g
    assert compiled.random_linear_extension(n, preds, succs, seed) == _kernels_py.random_linear_extension(
        n, preds, succs, seed
    )
    assert compiled.list_schedule(n, preds, succs, costs, workers) == _kernels_py.list_schedule(
        n, preds, succs, costs, workers
    )
    assert compiled.longest_path(n, preds, succs, costs) == _kernels_py.longest_path(n, preds, succs, costs)
    assert compiled.topological_order(n, succs) == _kernels_py.topological_order(n, succs)


def test_backend_selected_at_import():
    assert kernels.BACKEND == ("python" if os.environ.get("APAC_PURE_PYTHON") else "cython")


def test_pure_python_switch():
    env = dict(os.environ, APAC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from apac.sim import BACKEND; print(BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"

"""Command-line behavior: outputs, exit codes and diagnostics."""
from __future__ import annotations

import json
import subprocess
import sys

import pytest

from apac.cli import default_output, main, read_config
from support import corpus_source, golden_pair, normalized_tokens


@pytest.fixture
def cpp(tmp_path):
    def make(name: str, text: str):
        p = tmp_path / name
        p.write_text(text)
        return p
    return make


def test_transform_writes_default_output(cpp, capsys):
    src = cpp("assign.cpp", golden_pair("assignment_split")[0])
    assert main(["transform", str(src), "--strategy", "none"]) == 0
    out = src.with_name("assign.apac.cpp").read_text()
    assert out.startswith("// generated by apac")
    assert normalized_tokens(out) == normalized_tokens(golden_pair("assignment_split")[1])


def test_transform_to_explicit_output_and_analysis(cpp, tmp_path):
    src = cpp("q.cpp", corpus_source("quicksort"))
    dest = tmp_path / "out.cpp"
    rep = tmp_path / "rep.json"
    assert main(["transform", str(src), "-o", str(dest), "--dump-analysis", str(rep)]) == 0
    assert "#pragma omp task" in dest.read_text()
    data = json.loads(rep.read_text())
    assert {f["function"] for f in data["functions"]} >= {"quicksort", "main"}


def test_transform_many_files_in_parallel(cpp):
    paths = [cpp(f"{k}.cpp", corpus_source(name)) for k, name in enumerate(["fib", "md_toy", "methods"])]
    assert main(["transform", *map(str, paths), "--jobs", "3"]) == 0
    for p in paths:
        assert p.with_name(p.stem + ".apac.cpp").exists()


def test_failed_input_writes_nothing(cpp, capsys):
    good = cpp("good.cpp", corpus_source("fib"))
    bad = cpp("bad.cpp", "int main() { int x = ; }\n")
    assert main(["transform", str(good), str(bad)]) == 1
    assert not good.with_name("good.apac.cpp").exists()
    err = capsys.readouterr().err
    assert "bad.cpp:1:" in err and "error" in err


def test_unsupported_construct_is_reported(cpp, capsys):
    src = cpp("t.cpp", "template <typename T> T id(T x) { return x; }\n")
    assert main(["analyze", str(src)]) == 1
    assert "unsupported construct: template" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["transform", str(tmp_path / "nope.cpp")]) == 1
    assert "nope.cpp" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["transform"],
        ["frobnicate", "x.cpp"],
        ["transform", "x.cpp", "--strategy", "fast"],
        ["check", "x.cpp", "--schedules", "zero"],
        ["transform", "x.cpp", "--drop-sync", "nocolon"],
        ["graph", "x.cpp", "--workers", "0"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1


def test_analyze_prints_json(cpp, capsys):
    src = cpp("c.cpp", corpus_source("coherency_sync"))
    assert main(["analyze", str(src)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert any(f["syncs"] for f in data["functions"])


def test_exclude_flag(cpp, capsys):
    src = cpp("c.cpp", "void inc(int& v) { v += 1; }\nint main() { int a = 0; inc(a); inc(a); return a; }\n")
    assert main(["analyze", str(src), "--exclude", "inc"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert not any(f["taskgroup"] for f in data["functions"])


def test_graph_summary_and_dot(cpp, tmp_path, capsys):
    src = cpp("q.cpp", corpus_source("quicksort"))
    dot = tmp_path / "g.dot"
    assert main(["graph", str(src), "--strategy", "depth:3", "--json", "--dot", str(dot)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["max_depth"] == 3 and summary["makespan"] >= summary["critical_path"]
    assert dot.read_text().startswith("digraph")


def test_check_ok(cpp, capsys):
    src = cpp("n.cpp", corpus_source("nested_calls"))
    assert main(["check", str(src), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["divergent"] == 0 and summary["schedules"] >= 1


def test_check_dropped_sync_exits_2(cpp, capsys):
    src = cpp("c.cpp", corpus_source("coherency_sync"))
    assert main(["analyze", str(src)]) == 0
    data = json.loads(capsys.readouterr().out)
    fn = next(f for f in data["functions"] if f["syncs"])
    assert main(["check", str(src), "--drop-sync", f"{fn['function']}:0"]) == 2
    out = capsys.readouterr().out
    assert "DIVERGED" in out and "sequential" in out


def test_check_sampled_schedules(cpp, capsys):
    src = cpp("q.cpp", corpus_source("quicksort"))
    assert main(["check", str(src), "--strategy", "depth:2", "--schedules", "15", "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["schedules"] == 15 and not summary["exhaustive"]


def test_missing_entry(cpp, capsys):
    src = cpp("f.cpp", corpus_source("fib"))
    assert main(["graph", str(src), "--entry", "nowhere"]) == 1
    assert "no entry function 'nowhere'" in capsys.readouterr().err


def test_config_file(cpp, tmp_path, capsys):
    src = cpp("q.cpp", corpus_source("quicksort"))
    conf = tmp_path / "apac.conf"
    conf.write_text("# defaults\nstrategy = depth:2\nworkers = 2\n")
    assert main(["graph", str(src), "--config", str(conf), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["strategy"] == "depth:2" and summary["workers"] == 2
    # flags win over the file
    assert main(["graph", str(src), "--config", str(conf), "--strategy", "depth:1", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["max_depth"] == 1


def test_config_rejects_unknown_keys(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    with pytest.raises(Exception):
        read_config(str(conf))


def test_default_output_name():
    assert default_output("dir/a.cpp") == "dir/a.apac.cpp"
    assert default_output("b.hpp") == "b.apac.hpp"
    assert default_output("noext") == "noext.apac.cpp"


def test_module_entry_point(cpp):
    src = cpp("f.cpp", corpus_source("fib"))
    res = subprocess.run([sys.executable, "-m", "apac", "check", str(src)], capture_output=True, text=True)
    assert res.returncode == 0 and "ok" in res.stdout


def test_graph_seed_selects_random_policy(cpp, capsys):
    src = cpp("f.cpp", corpus_source("fib"))
    runs = []
    for argv in (["--seed", "1"], ["--seed", "1"], []):
        assert main(["graph", str(src), "--json", *argv]) == 0
        runs.append(json.loads(capsys.readouterr().out))
    assert runs[0] == runs[1]
    # the graph does not depend on the ready-task order
    assert runs[0]["nodes"] == runs[2]["nodes"] and runs[0]["critical_path"] == runs[2]["critical_path"]

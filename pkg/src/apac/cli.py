"""Annotate C++ calls as OpenMP tasks and check the result by simulation.

Exit status: 0 on success, 1 on errors (bad usage, diagnostics, runtime
faults of the simulated program), 2 when ``check`` finds a divergent schedule.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .analysis import PlanOptions, analysis_report, analyze, ordered_syncs
from .frontend import FrontendError, SourceFile, Symbols, parse_translation_unit
from .throttle import DEFAULT_STRATEGY, ThrottleStrategy, parse_strategy

EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2

# config keys and the flag each one mirrors
CONFIG_KEYS = {
    "strategy", "exclude", "entry", "schedules", "seed", "workers", "output",
    "promotion", "cost", "dot", "dump_analysis", "jobs",
}


class UsageError(Exception):
    pass


class InputError(Exception):
    """A diagnostic about one input, already formatted with its location."""


@dataclass
class RunConfig:
    command: str
    inputs: list
    output: Optional[str] = None
    strategy: ThrottleStrategy = DEFAULT_STRATEGY
    entry: str = "main"
    schedules: str = "auto"
    seed: Optional[int] = None
    workers: int = 4
    exclude: frozenset = frozenset()
    promotion: str = "task"
    drop_sync: list = field(default_factory=list)
    cost: str = "unit"
    dot: Optional[str] = None
    dump_analysis: Optional[str] = None
    json: bool = False
    jobs: int = 0


# ------------------------------------------------------------------ io


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".apac-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for k, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{k}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{k}: unknown key '{key}'")
        out[key] = value
    return out


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"apac {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("inputs", nargs="+", metavar="FILE")
        sp.add_argument("--config", help="key = value file mirroring the flags")
        sp.add_argument("--strategy", help="none, count:N or depth:D (default depth:5)")
        sp.add_argument("--exclude", action="append", metavar="FN", help="leave FN untouched")
        sp.add_argument("--promotion", choices=["task", "inline", "none"],
                        help="how scope locals used by tasks are kept alive")
        sp.add_argument("--drop-sync", action="append", default=[], metavar="FN:INDEX",
                        help="remove a taskwait (index as listed by analyze)")

    t = sub.add_parser("transform", help="write OpenMP-annotated sources")
    common(t)
    t.add_argument("-o", "--output", help="output file (single input only)")
    t.add_argument("--dump-analysis", metavar="PATH", help="write the analysis report as JSON")
    t.add_argument("--jobs", type=int, help="files processed concurrently")

    a = sub.add_parser("analyze", help="print the analysis report as JSON")
    common(a)
    a.add_argument("-o", "--output")

    g = sub.add_parser("graph", help="extract the task graph and simulate its makespan")
    common(g)
    g.add_argument("--entry", help="function to run (default main)")
    g.add_argument("--dot", metavar="PATH", help="write the graph in DOT format")
    g.add_argument("--workers", type=int, help="simulated workers (default 4)")
    g.add_argument("--cost", choices=["unit", "ops"], help="task cost: 1 each or interpreted operations")
    g.add_argument("--seed", type=int, help="run ready tasks in seeded random order (default FIFO)")
    g.add_argument("--json", action="store_true", help="machine-readable summary")

    c = sub.add_parser("check", help="compare task schedules against sequential execution")
    common(c)
    c.add_argument("--entry", help="function to run (default main)")
    c.add_argument("--schedules", help="auto, all or a sample count (default auto)")
    c.add_argument("--seed", type=int, help="seed of the sampled schedules")
    c.add_argument("--json", action="store_true", help="machine-readable summary")
    return p


def _config_from(ns: argparse.Namespace) -> RunConfig:
    conf = read_config(ns.config) if getattr(ns, "config", None) else {}

    def pick(name, convert=str, default=None):
        v = getattr(ns, name, None)
        if v is not None and v != []:
            return v
        if name in conf:
            try:
                return convert(conf[name])
            except ValueError:
                raise UsageError(f"bad value for '{name}': {conf[name]!r}") from None
        return default

    def names(v):
        return [x.strip() for x in v.split(",") if x.strip()]

    try:
        strategy = parse_strategy(pick("strategy"))
    except ValueError as e:
        raise UsageError(str(e)) from None
    cfg = RunConfig(
        command=ns.command,
        inputs=list(ns.inputs),
        output=pick("output"),
        strategy=strategy,
        entry=pick("entry", default="main"),
        schedules=pick("schedules", default="auto"),
        seed=pick("seed", int),
        workers=pick("workers", int, 4),
        exclude=frozenset(x for v in pick("exclude", names, []) for x in names(v)),
        promotion=pick("promotion", default="task"),
        drop_sync=list(getattr(ns, "drop_sync", []) or []),
        cost=pick("cost", default="unit"),
        dot=pick("dot"),
        dump_analysis=pick("dump_analysis"),
        json=bool(getattr(ns, "json", False)),
        jobs=pick("jobs", int, 0),
    )
    if cfg.promotion not in ("task", "inline", "none"):
        raise UsageError(f"bad promotion {cfg.promotion!r}")
    if cfg.cost not in ("unit", "ops"):
        raise UsageError(f"bad cost model {cfg.cost!r}")
    if cfg.workers < 1:
        raise UsageError("--workers must be positive")
    if cfg.output and len(cfg.inputs) > 1 and cfg.command in ("transform", "analyze"):
        raise UsageError("-o needs a single input file")
    if cfg.command in ("graph", "check") and len(cfg.inputs) > 1 and (cfg.dot and cfg.dot != "-"):
        raise UsageError("--dot needs a single input file")
    if cfg.schedules not in ("auto", "all"):
        try:
            if int(cfg.schedules) < 1:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad --schedules {cfg.schedules!r}; expected auto, all or N") from None
    for d in cfg.drop_sync:
        fn, sep, idx = d.rpartition(":")
        if not sep or not fn or not idx.isdigit():
            raise UsageError(f"bad --drop-sync {d!r}; expected FN:INDEX")
    return cfg


# ------------------------------------------------------------------ pipeline


class Unit:
    """One input file carried through parsing and planning."""

    def __init__(self, path: str, cfg: RunConfig):
        self.path = path
        self.text = _read(path)
        src = SourceFile(self.text, path)
        try:
            self.tree = parse_translation_unit(src)
            self.symbols = Symbols(self.tree)
            self.options = PlanOptions(exclude=cfg.exclude, promotion=cfg.promotion)
            self.plan = analyze(self.tree, self.symbols, self.options)
            if cfg.drop_sync:
                self.options = PlanOptions(cfg.exclude, self._sync_keys(cfg.drop_sync), cfg.promotion)
                self.plan = analyze(self.tree, self.symbols, self.options)
        except FrontendError as e:
            raise InputError(e.format(src)) from None

    def _sync_keys(self, specs: list) -> frozenset:
        keys = set()
        for spec in specs:
            fn, _, idx = spec.rpartition(":")
            fp = next((p for f, p in self.plan.functions.items()
                       if f.qualified_name == fn or f.name == fn), None)
            if fp is None:
                raise InputError(f"{self.path}: error: no function '{fn}'")
            syncs = ordered_syncs(fp)
            if int(idx) >= len(syncs):
                raise InputError(f"{self.path}: error: '{fn}' has {len(syncs)} taskwait(s)")
            keys.add(syncs[int(idx)].key)
        return frozenset(keys)

    def warnings(self) -> list[str]:
        return [d.format(self.tree.source) for d in self.plan.warnings]


def header_comment(cfg: RunConfig) -> str:
    return f"// generated by apac {__version__} (strategy {cfg.strategy})\n"


def _transform_one(path: str, cfg: RunConfig):
    from .transform import transform_unit

    unit = Unit(path, cfg)
    res = transform_unit(unit.tree, cfg.strategy, unit.options, unit.plan)
    return unit, header_comment(cfg) + res.text


def _map_inputs(fn, cfg: RunConfig) -> list:
    """Runs ``fn(path, cfg)`` per input; results come back in input order.

    Each entry is ``(result, None)`` or ``(None, error message)``.
    """

    def guarded(path):
        try:
            return fn(path, cfg), None
        except (InputError, UsageError) as e:
            return None, str(e)

    jobs = cfg.jobs or min(8, len(cfg.inputs))
    if jobs <= 1 or len(cfg.inputs) == 1:
        return [guarded(p) for p in cfg.inputs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(guarded, cfg.inputs))


def cmd_transform(cfg: RunConfig, out, err) -> int:
    results = _map_inputs(_transform_one, cfg)
    failed = [msg for _, msg in results if msg]
    for msg in failed:
        print(msg, file=err)
    if failed:
        return EXIT_ERROR  # nothing is written when any input fails
    reports = []
    for path, ((unit, text), _) in zip(cfg.inputs, results):
        for w in unit.warnings():
            print(w, file=err)
        dest = cfg.output or default_output(path)
        _emit(dest, text)
        reports.append(analysis_report(unit.tree, unit.plan))
    if cfg.dump_analysis:
        data = reports[0] if len(reports) == 1 else reports
        _emit(cfg.dump_analysis, json.dumps(data, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def default_output(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}.apac{ext or '.cpp'}"


def cmd_analyze(cfg: RunConfig, out, err) -> int:
    results = _map_inputs(lambda p, c: Unit(p, c), cfg)
    failed = [msg for _, msg in results if msg]
    for msg in failed:
        print(msg, file=err)
    if failed:
        return EXIT_ERROR
    reports = [analysis_report(u.tree, u.plan) for u, _ in results]
    data = reports[0] if len(reports) == 1 else reports
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if cfg.output:
        _emit(cfg.output, text)
    else:
        out.write(text)
    return EXIT_OK


def _program(path: str, cfg: RunConfig):
    from .sim import Program

    unit = Unit(path, cfg)
    try:
        unit.symbols.function(cfg.entry)
    except KeyError:
        raise InputError(f"{path}: error: no entry function '{cfg.entry}'") from None
    return Program(unit.tree, unit.symbols, unit.plan, cfg.entry)


def _sim_errors():
    from .sim import InterpreterError, ScheduleMismatch

    return (InterpreterError, ScheduleMismatch, RecursionError)


def cmd_graph(cfg: RunConfig, out, err) -> int:
    from .sim import parallel_execute

    status = EXIT_OK
    summaries = []
    for path in cfg.inputs:
        try:
            prog = _program(path, cfg)
            policy = "fifo" if cfg.seed is None else "random"
            _, rec = parallel_execute(prog, cfg.strategy, policy, seed=cfg.seed or 0, cost=cfg.cost)
        except (InputError, UsageError) as e:
            print(e, file=err)
            status = EXIT_ERROR
            continue
        except _sim_errors() as e:
            print(f"{path}: error: {e}", file=err)
            status = EXIT_ERROR
            continue
        g = rec.graph
        span, speedup = g.makespan(cfg.workers)
        summary = {
            "file": path,
            "strategy": str(cfg.strategy),
            "nodes": len(g),
            "tasks": g.task_count(),
            "edges": len(g.edges),
            "edge_kinds": g.edge_kinds(),
            "max_depth": g.max_depth,
            "total_cost": g.total_cost,
            "critical_path": g.critical_path(),
            "workers": cfg.workers,
            "makespan": span,
            "speedup": speedup,
        }
        summaries.append(summary)
        if cfg.dot:
            _emit(cfg.dot, g.to_dot())
        if not cfg.json:
            out.write(
                f"{path}: {summary['nodes']} nodes, {summary['edges']} edges, depth {g.max_depth}, "
                f"critical path {summary['critical_path']:g}, makespan {span:g} on {cfg.workers} "
                f"workers, speedup {speedup:.3f}\n"
            )
    if cfg.json:
        out.write(json.dumps(summaries[0] if len(summaries) == 1 else summaries, indent=2, sort_keys=True) + "\n")
    return status


def cmd_check(cfg: RunConfig, out, err) -> int:
    from .sim import check_stf
    from .sim.schedules import EXHAUSTIVE_LIMIT, SAMPLES

    if cfg.schedules == "auto":
        limit, samples = EXHAUSTIVE_LIMIT, SAMPLES
    elif cfg.schedules == "all":
        limit, samples = 10 ** 6, SAMPLES
    else:
        limit, samples = 0, int(cfg.schedules)
    status = EXIT_OK
    summaries = []
    for path in cfg.inputs:
        try:
            prog = _program(path, cfg)
            rep = check_stf(prog, cfg.strategy, limit=limit, samples=samples, seed=cfg.seed or 0)
        except (InputError, UsageError) as e:
            print(e, file=err)
            status = EXIT_ERROR
            continue
        except _sim_errors() as e:
            print(f"{path}: error: {e}", file=err)
            status = EXIT_ERROR
            continue
        summary = {
            "file": path,
            "strategy": str(cfg.strategy),
            "nodes": rep.nodes,
            "edges": rep.edges,
            "schedules": rep.orders,
            "exhaustive": rep.exhaustive,
            "divergent": len(rep.mismatches),
        }
        if rep.mismatches:
            order, diff = rep.mismatches[0]
            summary["first_divergence"] = {
                "order": order,
                "diff": {k: [repr(a), repr(b)] for k, (a, b) in diff.items()},
            }
            if status == EXIT_OK:
                status = EXIT_DIVERGED
        summaries.append(summary)
        if not cfg.json:
            mode = "all" if rep.exhaustive else "sampled"
            verdict = "ok" if rep.ok else "DIVERGED"
            out.write(f"{path}: {rep.nodes} nodes, {rep.orders} schedules ({mode}): {verdict}\n")
            if rep.mismatches:
                for k, (a, b) in rep.mismatches[0][1].items():
                    out.write(f"  {k}: sequential {a!r}, schedule {b!r}\n")
    if cfg.json:
        out.write(json.dumps(summaries[0] if len(summaries) == 1 else summaries, indent=2, sort_keys=True) + "\n")
    return status


COMMANDS = {"transform": cmd_transform, "analyze": cmd_analyze, "graph": cmd_graph, "check": cmd_check}


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return COMMANDS[cfg.command](cfg, out, err)
    except UsageError as e:
        print(f"apac: error: {e}", file=err)
        return EXIT_ERROR


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; 2 is reserved for divergence here
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        cfg = _config_from(ns)
    except UsageError as e:
        print(f"apac: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: generate graphs, run trials, check configurations,
and explore small instances exhaustively.

All randomness flows from one seed through per-trial substreams, so any
trial is reproducible in isolation and summaries are byte-identical across
runs with the same seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from dataclasses import dataclass, fields
from multiprocessing import Pool
from pathlib import Path
from typing import Optional

from selfstab import engine, explorer, kcluster, speccheck, topology
from selfstab.daemon import make_daemon
from selfstab.engine import MonitorViolation
from selfstab.kcluster import CkAlgorithm, MeasureMonitor
from selfstab.topology import TopologyError

SCHEMA = "selfstab/1"


def substream(seed, *path) -> random.Random:
    """Independent RNG for a derived stream; stable across platforms."""
    digest = hashlib.sha256("/".join(map(str, (seed, *path))).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class ExperimentConfig:
    graph: str = "gen:random-connected:8"
    root: int = 0
    k: int = 1
    daemon: str = "sync"
    seed: int = 0
    trials: int = 10
    max_steps: int = 0  # 0 = default budget
    monitor: bool = True
    jobs: int = 1

    def to_text(self) -> str:
        lines = [f"# {SCHEMA} experiment"]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, _, val = (s.strip() for s in line.partition("="))
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            if known[key] in ("int", int):
                values[key] = int(val)
            elif known[key] in ("bool", bool):
                values[key] = val.lower() in ("1", "true", "yes", "on")
            else:
                values[key] = val
        return cls(**values)


def load_graph(source: str) -> topology.Network:
    """``gen:<kind>:<n>[:<seed>]`` or a path to an edge-list file."""
    if source.startswith("gen:"):
        parts = source.split(":")
        if len(parts) not in (3, 4):
            raise TopologyError(f"bad generator source {source!r}")
        kind, n = parts[1], int(parts[2])
        seed = int(parts[3]) if len(parts) == 4 else 0
        return topology.generate(kind, n, seed)
    path = Path(source[5:] if source.startswith("file:") else source)
    return topology.load_network(path.read_text())


def _emit(obj: dict, out: Optional[str]) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _run_trial(payload) -> dict:
    cfg, trial, trace_dir = payload
    net = load_graph(cfg.graph)
    tree = topology.build_spanning_tree(net, cfg.root)
    ids = topology.identity_ids(net.n)
    alg = CkAlgorithm(cfg.k)
    rng = substream(cfg.seed, "init", trial)
    g0 = kcluster.initial_configuration(net, tree, ids, cfg.k, rng)
    daemon = make_daemon(cfg.daemon)
    monitor = MeasureMonitor(net, tree, cfg.k, record_log=bool(trace_dir))
    monitors = [monitor] if cfg.monitor or trace_dir else []
    outcome: dict = {"trial": trial}
    try:
        trace = engine.execute(alg, net, g0, daemon,
                               max_steps=cfg.max_steps or None,
                               monitors=monitors,
                               seed=f"{cfg.seed}/{trial}")
    except MonitorViolation as exc:
        outcome.update(ok=False, error=f"monitor: {exc}")
        return outcome
    if trace_dir:
        lines = engine.export_trace_jsonl(trace, kcluster.state_to_json,
                                          potentials=monitor.log)
        path = Path(trace_dir) / f"trial{trial:04d}.jsonl"
        path.write_text("".join(line + "\n" for line in lines))
    outcome["steps"] = trace.steps
    outcome["terminal"] = trace.terminal
    if not trace.terminal:
        outcome.update(ok=False, error="budget exceeded")
        return outcome
    g = trace.final
    legit = speccheck.check_legitimate(net, tree, g, cfg.k)
    dom = speccheck.check_ok_dom(net, tree, g, cfg.k)
    counting = speccheck.check_counting(net, tree, g, cfg.k)
    heads = speccheck.clusterheads(g)
    outcome["clusterheads"] = len(heads)
    outcome["bound"] = speccheck.head_bound(net.n, cfg.k)
    outcome["ok"] = (legit.ok and dom.ok and counting.ok
                     and len(heads) <= outcome["bound"])
    if not outcome["ok"]:
        outcome["reports"] = [r.to_json() for r in (legit, dom, counting)
                              if not r.ok]
    return outcome


def cmd_run(args) -> int:
    cfg = ExperimentConfig()
    if args.config:
        cfg = ExperimentConfig.from_text(Path(args.config).read_text())
    for name in ("graph", "root", "k", "daemon", "seed", "trials",
                 "max_steps", "jobs"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if args.no_monitor:
        cfg.monitor = False
    if args.save_config:
        Path(args.save_config).write_text(cfg.to_text())
    if args.trace_dir:
        Path(args.trace_dir).mkdir(parents=True, exist_ok=True)

    payloads = [(cfg, t, args.trace_dir) for t in range(cfg.trials)]
    if cfg.jobs > 1:
        with Pool(cfg.jobs) as pool:
            outcomes = pool.map(_run_trial, payloads)
    else:
        outcomes = [_run_trial(p) for p in payloads]

    net = load_graph(cfg.graph)
    all_ok = all(o["ok"] for o in outcomes)
    summary = {
        "schema": SCHEMA,
        "config": {f.name: getattr(cfg, f.name) for f in fields(cfg)},
        "n": net.n,
        "trials": outcomes,
        "terminal": sum(1 for o in outcomes if o.get("terminal")),
        "max_clusterheads": max((o.get("clusterheads", 0) for o in outcomes),
                                default=0),
        "head_bound": speccheck.head_bound(net.n, cfg.k),
        "all_ok": all_ok,
    }
    _emit(summary, args.out)
    return 0 if all_ok else 1


def cmd_check(args) -> int:
    net = load_graph(args.graph)
    data = json.loads(Path(args.config).read_text())
    states = data["states"] if isinstance(data, dict) else data
    k = args.k if args.k is not None else int(data.get("k", 1))
    g = kcluster.config_from_json(states)
    if len(g) != net.n:
        print(f"config has {len(g)} states for {net.n} nodes", file=sys.stderr)
        return 2
    roots = [p for p in net.all_nodes() if g[p].par is None]
    if len(roots) != 1:
        print(f"expected one root, found {roots}", file=sys.stderr)
        return 2
    tree = topology.SpanTree(root=roots[0], par=tuple(s.par for s in g))
    ids = [s.id for s in g]
    assume = topology.validate_assume(net, tree, ids)
    alg = CkAlgorithm(k)
    report: dict = {"schema": SCHEMA, "k": k, "assume_ok": assume.ok}
    if not assume.ok:
        report["assume_violations"] = str(assume)
    terminal = engine.is_terminal(alg, net, g)
    report["terminal"] = terminal
    if not terminal:
        report["enabled"] = sorted(engine.enabled_set(alg, net, g))
    legit = speccheck.check_legitimate(net, tree, g, k)
    dom = speccheck.check_ok_dom(net, tree, g, k)
    counting = speccheck.check_counting(net, tree, g, k)
    report.update(legitimate=legit.to_json(),
                  ok_dom=dom.to_json(),
                  counting=counting.to_json(),
                  ok=(assume.ok and terminal and legit.ok and dom.ok
                      and counting.ok))
    if args.dot:
        Path(args.dot).write_text(speccheck.to_dot_clusters(net, tree, g))
    _emit(report, args.out)
    return 0 if report["ok"] else 1


def cmd_explore(args) -> int:
    if args.graph:
        net = load_graph(args.graph)
    else:
        net = topology.generate(args.kind, args.n, args.seed)
    tree = topology.build_spanning_tree(net, args.root)
    try:
        result = explorer.explore(net, tree, args.k,
                                  budget=args.budget,
                                  n_bound=args.bound,
                                  engine=args.engine,
                                  init_samples=args.samples,
                                  seed=args.seed)
    except explorer.ExploreError as exc:
        print(f"explore rejected: {exc}", file=sys.stderr)
        return 2
    payload = result.to_json()
    payload["schema"] = SCHEMA
    _emit(payload, args.out)
    return 0 if result.certified else 1


def cmd_generate(args) -> int:
    net = topology.generate(args.kind, args.n, args.seed)
    text = topology.dump_edge_list(net)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.dot:
        tree = topology.build_spanning_tree(net, args.root)
        Path(args.dot).write_text(topology.to_dot(net, tree))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfstab",
        description="simulate, check, and exhaustively verify the k-clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run randomized trials with monitors")
    p_run.add_argument("--config", help="experiment config file (key = value)")
    p_run.add_argument("--save-config", help="write the effective config")
    p_run.add_argument("--graph", help="gen:<kind>:<n>[:<seed>] or edge-list file")
    p_run.add_argument("--root", type=int)
    p_run.add_argument("--k", type=int)
    p_run.add_argument("--daemon", help="sync|central|rr|random:<p>|lazy")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--trials", type=int)
    p_run.add_argument("--max-steps", dest="max_steps", type=int)
    p_run.add_argument("--jobs", type=int)
    p_run.add_argument("--no-monitor", action="store_true")
    p_run.add_argument("--trace-dir", dest="trace_dir",
                       help="write one JSONL trace per trial")
    p_run.add_argument("--out")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="check a stored terminal configuration")
    p_check.add_argument("--graph", required=True)
    p_check.add_argument("--config", required=True, help="JSON state list")
    p_check.add_argument("--k", type=int)
    p_check.add_argument("--dot", help="write a cluster-colored DOT rendering")
    p_check.add_argument("--out")
    p_check.set_defaults(func=cmd_check)

    p_exp = sub.add_parser("explore", help="exhaustive small-instance verification")
    p_exp.add_argument("--graph", help="gen:<kind>:<n>[:<seed>] or edge-list file")
    p_exp.add_argument("--kind", default="path")
    p_exp.add_argument("--n", type=int, default=3)
    p_exp.add_argument("--root", type=int, default=0)
    p_exp.add_argument("--k", type=int, default=1)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--budget", type=int, default=explorer.DEFAULT_STATE_BUDGET)
    p_exp.add_argument("--bound", type=int, default=explorer.DEFAULT_N_BOUND)
    p_exp.add_argument("--engine", default="auto",
                       choices=("auto", "python", "numpy"))
    p_exp.add_argument("--samples", type=int,
                       help="sample this many initial configurations")
    p_exp.add_argument("--out")
    p_exp.set_defaults(func=cmd_explore)

    p_gen = sub.add_parser("generate", help="emit a generated graph as an edge list")
    p_gen.add_argument("--kind", default="path", choices=topology.GENERATOR_KINDS)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--root", type=int, default=0)
    p_gen.add_argument("--out")
    p_gen.add_argument("--dot", help="also write a DOT rendering")
    p_gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TopologyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Execution semantics of the locally-shared-memory model.

A configuration assigns one algorithm state to every node.  In one step a
nonempty set of enabled nodes is activated and each activated node
atomically rewrites its own state from its neighbors' current states
(composite atomicity).  The daemon chooses the activated set; executions
end when no node is enabled.

Algorithms plug in through :class:`Algorithm`: ``run`` returns the next
state of a node or ``None`` when the node is disabled.  The engine checks
at every applied move that the read-only projection of the state is
preserved and that the move actually changes the state.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

from selfstab.topology import Network

Config = tuple  # one state per node

GENERIC_STEP = "generic"


class EngineError(RuntimeError):
    pass


class MonitorViolation(EngineError):
    """A per-step monitor rejected a transition."""

    def __init__(self, step_index: int, message: str):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class Algorithm:
    """Per-node program: deterministic guarded actions over local views.

    ``run(state, channels, env, reply)`` sees the node's own state, its
    channel list, an accessor ``env(c)`` returning the neighbor state
    behind channel c (None for invalid names), and an accessor ``reply(c)``
    giving the neighbor's channel back.  It returns the next state, or
    None when every guard is false.

    ``action_names`` is nonempty for algorithms with prioritized actions;
    ``evaluate`` then also reports which guards hold, with priority baked
    in (at most one true guard).
    """

    action_names: tuple[str, ...] = ()

    def run(self, state, channels, env, reply):
        raise NotImplementedError

    def ro_part(self, state):
        return None

    def assume(self, net: Network, g: Config) -> bool:
        """Read-only assumption on initial configurations; default: none."""
        return True

    def evaluate(self, state, channels, env, reply):
        """Return (next state or None, guard tuple or None) in one pass."""
        return self.run(state, channels, env, reply), None


def local_env(net: Network, g: Config, p: int) -> Callable[[int], Any]:
    row = net.peers[p]
    def env(c: int):
        if 0 <= c < len(row):
            return g[row[c]]
        return None
    return env


def _evaluate_node(alg: Algorithm, net: Network, g: Config, p: int):
    return alg.evaluate(g[p], net.channels(p), local_env(net, g, p),
                        net.reply[p].__getitem__)


def node_result(alg: Algorithm, net: Network, g: Config, p: int):
    """Output of p's program in g: next state, or None if disabled."""
    return _evaluate_node(alg, net, g, p)[0]


def enabled(alg: Algorithm, net: Network, g: Config, p: int) -> bool:
    return node_result(alg, net, g, p) is not None


def enabled_set(alg: Algorithm, net: Network, g: Config) -> frozenset[int]:
    return frozenset(p for p in net.all_nodes() if enabled(alg, net, g, p))


def is_terminal(alg: Algorithm, net: Network, g: Config) -> bool:
    """Decidable emptiness test: run returns None for every node."""
    return all(not enabled(alg, net, g, p) for p in net.all_nodes())


@dataclass(frozen=True)
class StepRecord:
    """One applied step: who moved, to what, and the step class."""

    index: int
    activated: frozenset[int]
    diff: tuple[tuple[int, Any], ...]  # (node, new state), sorted by node
    step_class: str

    def diff_map(self) -> dict[int, Any]:
        return dict(self.diff)


def classify_step(alg: Algorithm, net: Network, g: Config,
                  activated: Iterable[int]) -> str:
    """Class of a step by the highest-priority guard among activated nodes."""
    if not alg.action_names:
        return GENERIC_STEP
    best: Optional[int] = None
    for p in activated:
        guards = _evaluate_node(alg, net, g, p)[1]
        if guards is None:
            return GENERIC_STEP
        for i, gi in enumerate(guards):
            if gi and (best is None or i < best):
                best = i
                break
    if best is None:
        raise EngineError("classify_step: no activated node has a true guard")
    return alg.action_names[best]


def apply_step(alg: Algorithm, net: Network, g: Config,
               activated: Iterable[int]) -> tuple[Config, StepRecord]:
    """Atomically execute the activated nodes; frame everything else.

    Raises on an empty activation, on activating a disabled node, on a
    move that does not change the state, and on a read-only violation.
    """
    act = frozenset(activated)
    if not act:
        raise EngineError("empty activation set")
    diff: dict[int, Any] = {}
    for p in sorted(act):
        nxt = node_result(alg, net, g, p)
        if nxt is None:
            raise EngineError(f"activated node {p} is disabled")
        if nxt == g[p]:
            raise EngineError(f"node {p}: run returned the unchanged state")
        if alg.ro_part(nxt) != alg.ro_part(g[p]):
            raise EngineError(f"node {p}: read-only part changed by run")
        diff[p] = nxt
    step_class = classify_step(alg, net, g, act)
    g2 = tuple(diff.get(p, g[p]) for p in net.all_nodes())
    record = StepRecord(index=0, activated=act,
                        diff=tuple(sorted(diff.items())), step_class=step_class)
    return g2, record


@dataclass
class ExecutionTrace:
    """A run: initial configuration, step records, and how it ended.

    Full configurations are kept only at checkpoints (every
    ``checkpoint_every`` steps); intermediate ones are rebuilt on demand
    from the diffs.
    """

    initial: Config
    records: list[StepRecord] = field(default_factory=list)
    terminal: bool = False
    budget_exhausted: bool = False
    checkpoint_every: int = 64
    _checkpoints: dict[int, Config] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.records)

    def config_at(self, i: int) -> Config:
        """Configuration after i steps (0 = initial)."""
        if not 0 <= i <= self.steps:
            raise IndexError(f"step index {i} outside trace of {self.steps} steps")
        base = max((j for j in self._checkpoints if j <= i), default=0)
        g = list(self._checkpoints.get(base, self.initial))
        for rec in self.records[base:i]:
            for p, s in rec.diff:
                g[p] = s
        return tuple(g)

    @property
    def final(self) -> Config:
        return self.config_at(self.steps)


class StepMonitor:
    """Base class for per-step checks run inside :func:`execute`."""

    def start(self, view: "StepView") -> None:
        pass

    def on_step(self, view: "StepView") -> None:
        pass


@dataclass
class StepView:
    """What a monitor sees after a step: the live caches of the run.

    ``guards[p]`` is the post-step guard tuple of node p when the
    algorithm reports guards, else None.  ``record`` is None in the
    initial ``start`` call.  Monitors must not mutate the lists.
    """

    net: Network
    alg: Algorithm
    states: list
    guards: list
    record: Optional[StepRecord]


class SelectionContext:
    """Handed to daemons: step counter, the run's RNG, and a probe that
    reports how many currently enabled nodes would become disabled if a
    single given node were activated alone."""

    def __init__(self, step_index: int, rng: random.Random,
                 newly_disabled: Callable[[int], int]):
        self.step_index = step_index
        self.rng = rng
        self.newly_disabled = newly_disabled


def default_step_budget(n: int) -> int:
    # safety net only; the potential monitor is the termination witness
    return max(100, 10 * n ** 3)


class _Run:
    """Incremental execution state: per-node run results and guards."""

    def __init__(self, alg: Algorithm, net: Network, g0: Config):
        self.alg = alg
        self.net = net
        self.states: list = list(g0)
        self.results: list = [None] * net.n
        self.guards: list = [None] * net.n
        self.enabled: set[int] = set()
        for p in net.all_nodes():
            self._refresh(p)

    def _refresh(self, p: int) -> None:
        nxt, grd = self._evaluate(p, self.states)
        self.results[p] = nxt
        self.guards[p] = grd
        if nxt is None:
            self.enabled.discard(p)
        else:
            self.enabled.add(p)

    def _evaluate(self, p: int, states: list):
        net = self.net
        row = net.peers[p]
        def env(c: int):
            if 0 <= c < len(row):
                return states[row[c]]
            return None
        return self.alg.evaluate(states[p], net.channels(p), env,
                                 net.reply[p].__getitem__)

    def commit(self, activated: frozenset[int]) -> None:
        for p in activated:
            self.states[p] = self.results[p]
        touched = set(activated)
        for p in activated:
            touched.update(self.net.peers[p])
        for p in touched:
            self._refresh(p)

    def newly_disabled_by(self, p: int) -> int:
        """Probe: count of enabled nodes disabled by activating {p} alone."""
        trial = list(self.states)
        trial[p] = self.results[p]
        count = 0
        for q in (p, *self.net.peers[p]):
            if q in self.enabled and self._evaluate(q, trial)[0] is None:
                count += 1
        return count

    def step_class(self, activated: frozenset[int]) -> str:
        if not self.alg.action_names:
            return GENERIC_STEP
        best: Optional[int] = None
        for p in activated:
            grd = self.guards[p]
            if grd is None:
                return GENERIC_STEP
            for i, gi in enumerate(grd):
                if gi:
                    if best is None or i < best:
                        best = i
                    break
        if best is None:
            raise EngineError("activated set without a true guard")
        return self.alg.action_names[best]


def execute(alg: Algorithm, net: Network, g0: Config, daemon,
            max_steps: Optional[int] = None,
            monitors: Sequence[StepMonitor] = (),
            seed: int = 0,
            check_assume: bool = True) -> ExecutionTrace:
    """Run the algorithm from g0 under the daemon until terminal or budget.

    Deterministic for fixed (daemon, seed).  Monitors see every step and
    may raise :class:`MonitorViolation`.  A terminal ending is re-verified
    by an independent full scan of all guards.
    """
    if check_assume and not alg.assume(net, g0):
        raise EngineError("assumption predicate fails on the initial configuration")
    if max_steps is None:
        max_steps = default_step_budget(net.n)
    rng = random.Random(f"exec/{seed}")
    daemon.reset()

    run = _Run(alg, net, g0)
    trace = ExecutionTrace(initial=g0)
    view = StepView(net=net, alg=alg, states=run.states, guards=run.guards,
                    record=None)
    for m in monitors:
        m.start(view)

    while True:
        if not run.enabled:
            if not is_terminal(alg, net, tuple(run.states)):
                raise EngineError("terminal flag contradicts full guard scan")
            trace.terminal = True
            return trace
        if trace.steps >= max_steps:
            trace.budget_exhausted = True
            return trace

        index = trace.steps
        ctx = SelectionContext(index, rng, run.newly_disabled_by)
        activated = frozenset(daemon.select(frozenset(run.enabled), ctx))
        if not activated:
            raise EngineError("daemon selected an empty set")
        if not activated <= run.enabled:
            raise EngineError("daemon selected a disabled node")

        diff = {}
        for p in sorted(activated):
            nxt = run.results[p]
            if nxt == run.states[p]:
                raise EngineError(f"node {p}: run returned the unchanged state")
            if alg.ro_part(nxt) != alg.ro_part(run.states[p]):
                raise EngineError(f"node {p}: read-only part changed by run")
            diff[p] = nxt
        record = StepRecord(index=index, activated=activated,
                            diff=tuple(sorted(diff.items())),
                            step_class=run.step_class(activated))
        run.commit(activated)
        trace.records.append(record)
        if trace.steps % trace.checkpoint_every == 0:
            trace._checkpoints[trace.steps] = tuple(run.states)

        view.record = record
        for m in monitors:
            m.on_step(view)


def export_trace_jsonl(trace: ExecutionTrace,
                       state_to_json: Callable[[Any], Any],
                       potentials: Optional[Sequence] = None) -> Iterable[str]:
    """Yield one JSON line per step: activated ids, deltas, class, measure."""
    for i, rec in enumerate(trace.records):
        entry: dict[str, Any] = {
            "step": rec.index,
            "activated": sorted(rec.activated),
            "deltas": {str(p): state_to_json(s) for p, s in rec.diff},
            "class": rec.step_class,
        }
        if potentials is not None and i < len(potentials):
            triple = potentials[i]
            entry["potentials"] = {
                "alpha": triple.pot_alpha.elements(),
                "parc": triple.pot_parc.elements(),
                "headc": triple.pot_headc.elements(),
            }
        yield json.dumps(entry, sort_keys=True)

"""Silent k-clustering over a rooted spanning tree.

Each node carries an integer level ``alpha``, a cluster parent pointer
``parc`` (a channel or None), and a clusterhead identifier ``headc``; the
node identifier and tree parent channel are read-only inputs.  Three
prioritized guarded actions repair alpha bottom-up, then the parent
pointers, then propagate head identifiers down the parent chains.  Nodes
with ``alpha < k`` are short, others tall; a node heads a cluster when
``alpha == k`` or it is a short root.

The module also defines the per-action node potentials whose multisets
strictly decrease (Dershowitz-Manna) with every step of the matching
class, which is what the runtime termination monitor checks.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

from selfstab.engine import Algorithm, StepMonitor, StepView, MonitorViolation
from selfstab.order import (MeasureTriple, NatMultiset, check_criteria,
                            dm_less, ms_equal)
from selfstab.topology import Network, SpanTree, validate_assume

ALPHA_INPUT_BOUND = 10 ** 6

ALPHA_STEP, PARC_STEP, HEADC_STEP = "alpha", "parc", "headc"


class PclCycleError(RuntimeError):
    """A cycle in the cluster-parent chain; impossible when the read-only
    assumptions hold, so any occurrence is a bug report."""


@dataclass(frozen=True)
class CkState:
    """Per-node state; ``id`` and ``par`` are the read-only inputs."""

    id: int
    par: Optional[int]
    alpha: int
    parc: Optional[int]
    headc: int


class Macros(NamedTuple):
    max_a_short: int
    min_a_tall: int
    min_c_min_a_tall: Optional[int]
    alpha: int
    par_c: Optional[int]
    head_c: int
    is_short: bool
    is_tall: bool
    k_dominator: bool


def macros(state: CkState, channels, env, reply, k: int) -> Macros:
    """Evaluate every predicate and macro of the algorithm at one node.

    Tree children are the neighbors whose parent channel replies to us.
    ``max_a_short`` is clamped below by -1 and ``min_a_tall`` above by
    2k+1, so both stay in range for arbitrary neighbor values.
    """
    max_a_short = -1
    min_a_tall = 2 * k + 1
    min_c: Optional[int] = None
    for c in channels:
        q = env(c)
        if q is None or q.par != reply(c):
            continue
        a = q.alpha
        if a < k:
            if a > max_a_short:
                max_a_short = a
        elif a < min_a_tall:
            min_a_tall = a
            min_c = c
        elif a == min_a_tall and min_c is None:
            min_c = c

    if max_a_short + min_a_tall <= 2 * k - 2:
        alpha = min_a_tall + 1
    else:
        alpha = max_a_short + 1

    is_short = state.alpha < k
    is_tall = not is_short
    k_dominator = state.alpha == k or (is_short and state.par is None)

    if state.alpha == k:
        par_c: Optional[int] = None
    elif is_short:
        par_c = state.par
    else:
        par_c = min_c

    if k_dominator:
        head_c = state.id
    else:
        through = env(state.parc) if state.parc is not None else None
        head_c = state.headc if through is None else through.headc

    return Macros(max_a_short, min_a_tall, min_c, alpha, par_c, head_c,
                  is_short, is_tall, k_dominator)


class CkAlgorithm(Algorithm):
    """The three prioritized actions as an engine-pluggable program."""

    action_names = (ALPHA_STEP, PARC_STEP, HEADC_STEP)

    def __init__(self, k: int):
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        self.k = k

    def evaluate(self, state: CkState, channels, env, reply):
        m = macros(state, channels, env, reply, self.k)
        if state.alpha != m.alpha:
            return replace(state, alpha=m.alpha), (True, False, False)
        if state.parc != m.par_c:
            return replace(state, parc=m.par_c), (False, True, False)
        if state.headc != m.head_c:
            return replace(state, headc=m.head_c), (False, False, True)
        return None, (False, False, False)

    def run(self, state, channels, env, reply):
        return self.evaluate(state, channels, env, reply)[0]

    def ro_part(self, state: CkState):
        return (state.id, state.par)

    def assume(self, net: Network, g) -> bool:
        """Symmetric net, unique ids, and a rooted spanning tree in the
        read-only part of g."""
        roots = [p for p in net.all_nodes() if g[p].par is None]
        if len(roots) != 1:
            return False
        tree = SpanTree(root=roots[0], par=tuple(g[p].par for p in net.all_nodes()))
        ids = [g[p].id for p in net.all_nodes()]
        return validate_assume(net, tree, ids).ok


def node_guards(net: Network, g, k: int, p: int) -> tuple[bool, bool, bool]:
    """Guard values of the three actions at p (priority included)."""
    state = g[p]
    row = net.peers[p]
    def env(c):
        if 0 <= c < len(row):
            return g[row[c]]
        return None
    m = macros(state, net.channels(p), env, net.reply[p].__getitem__, k)
    g1 = state.alpha != m.alpha
    g2 = not g1 and state.parc != m.par_c
    g3 = not g1 and not g2 and state.headc != m.head_c
    return (g1, g2, g3)


@lru_cache(maxsize=256)
def tree_depths(net: Network, tree: SpanTree) -> tuple[int, ...]:
    """Depth of each node: 1 at the root, +1 per tree hop away from it."""
    d = [0] * net.n
    d[tree.root] = 1
    queue = deque([tree.root])
    while queue:
        p = queue.popleft()
        for q in tree.children(net, p):
            d[q] = d[p] + 1
            queue.append(q)
    if any(v == 0 for v in d):
        raise ValueError("tree does not span the network")
    return tuple(d)


def depth(net: Network, tree: SpanTree, p: int) -> int:
    return tree_depths(net, tree)[p]


def _pcl_successor(net: Network, g, p: int,
                   guards: Sequence[tuple[bool, bool, bool]]) -> Optional[int]:
    # in the parC-path relation iff alpha- and parC-disabled with a valid pointer
    g1, g2, _ = guards[p]
    if g1 or g2:
        return None
    c = g[p].parc
    if c is None:
        return None
    return net.peer(p, c)


def dist_hd(net: Network, g, k: int, p: int,
            guards: Optional[Sequence[tuple[bool, bool, bool]]] = None) -> int:
    """Length of the cluster-parent chain hanging off p.

    Follows parc pointers through alpha- and parC-disabled nodes; raises
    :class:`PclCycleError` if the chain revisits a node.
    """
    if guards is None:
        guards = [node_guards(net, g, k, q) for q in net.all_nodes()]
    seen = {p}
    cur, dist = p, 0
    while True:
        nxt = _pcl_successor(net, g, cur, guards)
        if nxt is None:
            return dist
        if nxt in seen:
            raise PclCycleError(f"parC chain from {p} revisits node {nxt}")
        seen.add(nxt)
        cur, dist = nxt, dist + 1


def alpha_pot(net: Network, tree: SpanTree, g, k: int, p: int) -> int:
    """Tree depth of p while its first action is enabled, else 0."""
    return tree_depths(net, tree)[p] if node_guards(net, g, k, p)[0] else 0


def parc_pot(net: Network, tree: SpanTree, g, k: int, p: int) -> int:
    return 1 if node_guards(net, g, k, p)[1] else 0


def headc_pot(net: Network, tree: SpanTree, g, k: int, p: int) -> int:
    """(n+1) minus the chain length while the third action is enabled."""
    if not node_guards(net, g, k, p)[2]:
        return 0
    return net.n + 1 - dist_hd(net, g, k, p)


def potential_vectors(net: Network, tree: SpanTree, g, k: int,
                      guards: Optional[Sequence[tuple[bool, bool, bool]]] = None,
                      ) -> tuple[list[int], list[int], list[int]]:
    """Per-node potentials of the three actions, one shared guard pass."""
    if guards is None:
        guards = [node_guards(net, g, k, p) for p in net.all_nodes()]
    depths = tree_depths(net, tree)
    nn = net.n + 1
    pa = [depths[p] if guards[p][0] else 0 for p in net.all_nodes()]
    pp = [1 if guards[p][1] else 0 for p in net.all_nodes()]
    ph = [0] * net.n
    memo: dict[int, int] = {}
    for p in net.all_nodes():
        if guards[p][2]:
            ph[p] = nn - _dist_hd_memo(net, g, p, guards, memo)
    return pa, pp, ph


def _dist_hd_memo(net: Network, g, p: int, guards, memo: dict[int, int]) -> int:
    path = []
    cur = p
    on_path = set()
    while cur not in memo:
        if cur in on_path:
            raise PclCycleError(f"parC chain from {p} revisits node {cur}")
        nxt = _pcl_successor(net, g, cur, guards)
        if nxt is None:
            memo[cur] = 0
            break
        path.append(cur)
        on_path.add(cur)
        cur = nxt
    for q in reversed(path):
        memo[q] = memo[_pcl_successor(net, g, q, guards)] + 1
    return memo[p]


def measure_triple(net: Network, tree: SpanTree, g, k: int,
                   guards=None) -> MeasureTriple:
    pa, pp, ph = potential_vectors(net, tree, g, k, guards)
    return MeasureTriple(NatMultiset(pa), NatMultiset(pp), NatMultiset(ph))


class MeasureMonitor(StepMonitor):
    """Per-step termination witness.

    alpha steps must DM-decrease the alpha multiset; parc steps must keep
    it and DM-decrease the parc multiset; headc steps must keep both and
    DM-decrease the headc multiset.  Hence the lexicographic triple
    strictly decreases with every step.
    """

    def __init__(self, net: Network, tree: SpanTree, k: int,
                 record_log: bool = False):
        self.net = net
        self.tree = tree
        self.k = k
        self.record_log = record_log
        self.log: list[MeasureTriple] = []
        self._prev: Optional[MeasureTriple] = None
        tree_depths(net, tree)  # fail fast on a non-spanning tree

    def _triple(self, view: StepView) -> MeasureTriple:
        guards = view.guards if all(grd is not None for grd in view.guards) else None
        return measure_triple(self.net, self.tree, tuple(view.states), self.k, guards)

    def start(self, view: StepView) -> None:
        self._prev = self._triple(view)

    def on_step(self, view: StepView) -> None:
        assert self._prev is not None, "monitor used before start()"
        before, after = self._prev, self._triple(view)
        rec = view.record
        cls = rec.step_class
        if cls == ALPHA_STEP:
            ok = dm_less(after.pot_alpha, before.pot_alpha)
        elif cls == PARC_STEP:
            ok = (ms_equal(after.pot_alpha, before.pot_alpha)
                  and dm_less(after.pot_parc, before.pot_parc))
        elif cls == HEADC_STEP:
            ok = (ms_equal(after.pot_alpha, before.pot_alpha)
                  and ms_equal(after.pot_parc, before.pot_parc)
                  and dm_less(after.pot_headc, before.pot_headc))
        else:
            raise MonitorViolation(rec.index, f"unknown step class {cls!r}")
        if not ok:
            raise MonitorViolation(
                rec.index,
                f"{cls} step broke the measure contract: "
                f"{before} -> {after}")
        self._prev = after
        if self.record_log:
            self.log.append(after)


class CriteriaMonitor(StepMonitor):
    """Runtime form of the local/global decrease criteria.

    On a step of class X, the per-node potentials of X must pass
    ``check_criteria``: any riser needs a changed witness that started
    above the riser's new value, and something must change.  The criteria
    are sufficient for the DM decrease that :class:`MeasureMonitor`
    checks; kept separate as an independent second route.
    """

    def __init__(self, net: Network, tree: SpanTree, k: int):
        self.net = net
        self.tree = tree
        self.k = k
        self._prev: Optional[tuple[list[int], list[int], list[int]]] = None

    def _vectors(self, view: StepView):
        guards = view.guards if all(g is not None for g in view.guards) else None
        return potential_vectors(self.net, self.tree, tuple(view.states),
                                 self.k, guards)

    def start(self, view: StepView) -> None:
        self._prev = self._vectors(view)

    def on_step(self, view: StepView) -> None:
        assert self._prev is not None
        after = self._vectors(view)
        rec = view.record
        index = {ALPHA_STEP: 0, PARC_STEP: 1, HEADC_STEP: 2}.get(rec.step_class)
        if index is None:
            raise MonitorViolation(rec.index, f"unknown class {rec.step_class!r}")
        verdict = check_criteria(self._prev[index], after[index])
        if not verdict.ok:
            raise MonitorViolation(
                rec.index,
                f"{rec.step_class} step fails the {verdict.status} criterion"
                + (f" at node {verdict.witness}" if verdict.witness is not None
                   else ""))
        self._prev = after


def identity_config(net: Network, tree: SpanTree, ids: Sequence[int],
                    alphas: Sequence[int], parcs: Sequence[Optional[int]],
                    headcs: Sequence[int]) -> tuple[CkState, ...]:
    """Assemble a configuration from parallel per-node value arrays."""
    return tuple(CkState(id=ids[p], par=tree.par[p], alpha=alphas[p],
                         parc=parcs[p], headc=headcs[p])
                 for p in net.all_nodes())


def zero_configuration(net: Network, tree: SpanTree,
                       ids: Sequence[int]) -> tuple[CkState, ...]:
    """alpha 0, no cluster parent, every head identifier 0."""
    return identity_config(net, tree, ids, [0] * net.n, [None] * net.n,
                           [0] * net.n)


def ghost_id(ids: Sequence[int]) -> int:
    return max(ids) + 1


def initial_configuration(net: Network, tree: SpanTree, ids: Sequence[int],
                          k: int, rng: random.Random, *,
                          extreme_fraction: float = 0.1,
                          inject_invalid_parc: bool = False,
                          ) -> tuple[CkState, ...]:
    """Sample a garbage initial configuration.

    alpha is uniform in [-(2k+2), 4k+2] with forced extremes on roughly a
    tenth of the nodes, parc is uniform over the node's channels plus
    None (optionally an out-of-range channel under the stress flag), and
    headc is uniform over the real identifiers plus one ghost.
    """
    ghost = ghost_id(ids)
    lo, hi = -(2 * k + 2), 4 * k + 2
    states = []
    for p in net.all_nodes():
        alpha = rng.randint(lo, hi)
        if rng.random() < extreme_fraction:
            alpha = rng.choice((lo, hi))
        if abs(alpha) > ALPHA_INPUT_BOUND:
            raise ValueError(f"initial alpha {alpha} exceeds the input bound")
        options: list[Optional[int]] = [None, *net.channels(p)]
        if inject_invalid_parc:
            options.append(net.degree(p) + rng.randint(1, 3))
        parc = rng.choice(options)
        headc = rng.choice([*ids, ghost])
        states.append(CkState(id=ids[p], par=tree.par[p], alpha=alpha,
                              parc=parc, headc=headc))
    return tuple(states)


def state_to_json(s: CkState) -> dict:
    return {"id": s.id, "par": s.par, "alpha": s.alpha,
            "parC": s.parc, "headC": s.headc}


def state_from_json(obj: dict) -> CkState:
    alpha = int(obj["alpha"])
    if abs(alpha) > ALPHA_INPUT_BOUND:
        raise ValueError(f"alpha {alpha} exceeds the input bound")
    return CkState(id=int(obj["id"]),
                   par=None if obj["par"] is None else int(obj["par"]),
                   alpha=alpha,
                   parc=None if obj["parC"] is None else int(obj["parC"]),
                   headc=int(obj["headC"]))


def config_to_json(g) -> list[dict]:
    return [state_to_json(s) for s in g]


def config_from_json(items: Sequence[dict]) -> tuple[CkState, ...]:
    return tuple(state_from_json(o) for o in items)

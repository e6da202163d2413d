"""Structural checkers for terminal configurations of the k-clustering.

A terminal configuration should describe a partition of the nodes into
clusters of radius at most k, one head each, with at most
floor((n-1)/(k+1)) + 1 heads.  The checkers here re-derive that from
first principles: a witness graph built from the alpha values (the
kdom-graph) certifies k-hop domination, the cluster-parent chains are
walked explicitly, and the head count is bounded by a direct counting
argument over regular heads and regular nodes.

All checks are report-style: every violated clause is listed with a
witness instead of raising.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from selfstab.topology import Network, SpanTree


@dataclass
class CheckReport:
    name: str
    clauses: dict[str, bool] = field(default_factory=dict)
    witnesses: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    def fail(self, clause: str, witness: Any) -> None:
        self.clauses[clause] = False
        self.witnesses.setdefault(clause, witness)

    def passed(self, clause: str) -> None:
        self.clauses.setdefault(clause, True)

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "clauses": dict(self.clauses),
                "witnesses": {k: v for k, v in self.witnesses.items()}}

    def __str__(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, default=str)


def is_k_dominator(state, k: int) -> bool:
    return state.alpha == k or (state.alpha < k and state.par is None)


def k_dominators(g, k: int) -> list[int]:
    return [p for p, s in enumerate(g) if is_k_dominator(s, k)]


def clusterheads(g) -> list[int]:
    """Nodes declaring themselves: head identifier equals own identifier."""
    return [p for p, s in enumerate(g) if s.headc == s.id]


def head_bound(n: int, k: int) -> int:
    return (n - 1) // (k + 1) + 1


def kdom_edges(net: Network, tree: SpanTree, g, k: int) -> list[tuple[int, int]]:
    """Directed witness edges over tree links.

    Every non-root short node receives an edge from its tree parent; every
    tall non-dominator t receives an edge from each tree child whose alpha
    is exactly alpha(t) - 1.
    """
    edges: list[tuple[int, int]] = []
    for p in net.all_nodes():
        s = g[p]
        if s.alpha < k:
            q = tree.parent(net, p)
            if q is not None:
                edges.append((q, p))
        elif not is_k_dominator(s, k):
            for c in tree.children(net, p):
                if g[c].alpha == s.alpha - 1:
                    edges.append((c, p))
    return edges


def _toposort(n: int, edges: Sequence[tuple[int, int]]):
    """Kahn order and, if cyclic, a witness cycle."""
    out: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in edges:
        out[u].append(v)
        indeg[v] += 1
    queue = deque(p for p in range(n) if indeg[p] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    if len(order) == n:
        return order, None
    # every residual node keeps an in-edge from the residual set, so
    # walking predecessors backward must run into a cycle
    residual = {p for p in range(n) if indeg[p] > 0}
    pred: dict[int, int] = {}
    for u, v in edges:
        if u in residual and v in residual:
            pred.setdefault(v, u)
    start = next(iter(residual))
    seen: dict[int, int] = {}
    path = [start]
    while path[-1] not in seen:
        seen[path[-1]] = len(path) - 1
        path.append(pred[path[-1]])
    cycle = path[seen[path[-1]]:]
    cycle.reverse()
    return order, cycle


def check_ok_dom(net: Network, tree: SpanTree, g, k: int) -> CheckReport:
    """k-hop domination certificate from the witness graph.

    Every node must be reachable from some dominator along kdom-edges,
    and no kdom-path may be longer than k (checked by a longest-path
    sweep after a cycle check).
    """
    report = CheckReport("ok_dom")
    edges = kdom_edges(net, tree, g, k)
    order, cycle = _toposort(net.n, edges)
    if cycle is not None:
        report.fail("acyclic", {"cycle": cycle})
        report.passed("dominated")
        report.passed("path_bound")
        return report
    report.passed("acyclic")

    incoming: list[list[int]] = [[] for _ in range(net.n)]
    outgoing: list[list[int]] = [[] for _ in range(net.n)]
    for u, v in edges:
        incoming[v].append(u)
        outgoing[u].append(v)

    dom = set(k_dominators(g, k))
    reached = set(dom)
    queue = deque(dom)
    while queue:
        u = queue.popleft()
        for v in outgoing[u]:
            if v not in reached:
                reached.add(v)
                queue.append(v)
    missing = [p for p in net.all_nodes() if p not in reached]
    if missing:
        report.fail("dominated", {"unreached": missing[0]})
    else:
        report.passed("dominated")

    longest = [0] * net.n
    back: list[Optional[int]] = [None] * net.n
    for v in order:
        for u in incoming[v]:
            if longest[u] + 1 > longest[v]:
                longest[v] = longest[u] + 1
                back[v] = u
    worst = max(net.all_nodes(), key=lambda p: longest[p], default=None)
    if worst is not None and longest[worst] > k:
        path = [worst]
        while back[path[-1]] is not None:
            path.append(back[path[-1]])
        report.fail("path_bound",
                    {"length": longest[worst], "path": list(reversed(path))})
    else:
        report.passed("path_bound")
    return report


def _max_cluster_chain(net: Network, g, p: int):
    """Maximal cluster-parent chain from p: (node list, cyclic?)."""
    chain = [p]
    seen = {p}
    cur = p
    while True:
        c = g[cur].parc
        nxt = None if c is None else net.peer(cur, c)
        if nxt is None:
            return chain, False
        if nxt in seen:
            chain.append(nxt)
            return chain, True
        chain.append(nxt)
        seen.add(nxt)
        cur = nxt


def check_legitimate(net: Network, tree: SpanTree, g, k: int) -> CheckReport:
    """Full legitimacy of a terminal configuration.

    Clauses: alpha values in [0, 2k]; dominator set equals the declared
    head set; every node reaches a head along an agreeing cluster-parent
    chain of at most k hops whose reversed edges all appear in the
    kdom-graph; every node names exactly one existing head; cluster sizes
    add up to n; and the head-count bound holds.
    """
    report = CheckReport("legitimate")
    n = net.n

    for p in net.all_nodes():
        if not 0 <= g[p].alpha <= 2 * k:
            report.fail("alpha_range", {"node": p, "alpha": g[p].alpha})
            break
    report.passed("alpha_range")

    for p in net.all_nodes():
        if is_k_dominator(g[p], k) != (g[p].headc == g[p].id):
            report.fail("heads_equiv_dominators", {"node": p})
            break
    report.passed("heads_equiv_dominators")

    owner: dict[int, int] = {}
    dup_ids = False
    for p in net.all_nodes():
        if g[p].id in owner:
            report.fail("partition", {"duplicate_id": g[p].id})
            dup_ids = True
            break
        owner[g[p].id] = p
    if not dup_ids:
        for p in net.all_nodes():
            if g[p].headc not in owner:
                report.fail("partition", {"node": p, "headc": g[p].headc})
                break
    report.passed("partition")

    kdom = set(kdom_edges(net, tree, g, k))
    members: dict[int, int] = {}
    for p in net.all_nodes():
        chain, cyclic = _max_cluster_chain(net, g, p)
        if cyclic:
            report.fail("kcluster_strong", {"node": p, "cycle": chain})
            continue
        h = chain[-1]
        if g[h].headc != g[h].id:
            report.fail("kcluster_strong", {"node": p, "chain_end": h,
                                            "reason": "end is not a head"})
            continue
        if any(g[q].headc != g[h].id for q in chain):
            report.fail("kcluster_strong", {"node": p, "chain": chain,
                                            "reason": "head disagreement"})
            continue
        if len(chain) - 1 > k:
            report.fail("kcluster_strong", {"node": p, "chain": chain,
                                            "reason": "chain longer than k"})
            continue
        if any((b, a) not in kdom for a, b in zip(chain, chain[1:])):
            report.fail("cluster_in_kdom", {"node": p, "chain": chain})
        members[h] = members.get(h, 0) + 1
    report.passed("kcluster_strong")
    report.passed("cluster_in_kdom")

    if report.clauses["kcluster_strong"] and sum(members.values()) != n:
        report.fail("cluster_sizes", {"sizes": members})
    report.passed("cluster_sizes")

    ch = clusterheads(g)
    if n - 1 < (k + 1) * (len(ch) - 1):
        report.fail("count_ok", {"heads": len(ch), "bound": head_bound(n, k)})
    report.passed("count_ok")
    return report


def has_tall_ancestor(net: Network, tree: SpanTree, g, k: int) -> list[bool]:
    """Per node: does the tree path up to the root (self included) contain
    a node with alpha at least k?"""
    out = [False] * net.n
    order = deque([tree.root])
    seen = []
    while order:
        p = order.popleft()
        seen.append(p)
        for q in tree.children(net, p):
            order.append(q)
    for p in seen:  # root-first, parents settled before children
        up = tree.parent(net, p)
        out[p] = g[p].alpha >= k or (up is not None and out[up])
    return out


def check_counting(net: Network, tree: SpanTree, g, k: int) -> CheckReport:
    """Counting argument behind the head bound, on a terminal configuration.

    Regular heads have alpha exactly k; regular nodes have a tall ancestor
    in the tree.  Checks rn >= (k+1) * rh, the root-tall / root-short case
    split against the dominator count, and constructively that every
    regular head is named by a regular node of every alpha in 0..k.
    """
    report = CheckReport("counting")
    n = net.n
    reg_heads = [h for h in net.all_nodes() if g[h].alpha == k]
    rh = len(reg_heads)
    regular = has_tall_ancestor(net, tree, g, k)
    rn = sum(regular)
    dom = k_dominators(g, k)
    report.witnesses["counts"] = {"rh": rh, "rn": rn, "dominators": len(dom)}

    if rn < (k + 1) * rh:
        report.fail("simple_counting", {"rn": rn, "rh": rh})
    report.passed("simple_counting")

    root_tall = g[tree.root].alpha >= k
    if root_tall:
        split_ok = len(dom) == rh and n == rn
    else:
        split_ok = len(dom) == 1 + rh and n >= 1 + rn
    if not split_ok:
        report.fail("split_cases", {"root_tall": root_tall, "dominators": len(dom),
                                    "rh": rh, "n": n, "rn": rn})
    report.passed("split_cases")

    for h in reg_heads:
        for i in range(k + 1):
            if not any(regular[p] and g[p].alpha == i and g[p].headc == g[h].id
                       for p in net.all_nodes()):
                report.fail("rcount_witness", {"head": h, "alpha": i})
    report.passed("rcount_witness")
    return report


_PALETTE = ("lightblue", "palegreen", "lightsalmon", "plum", "khaki",
            "lightpink", "aquamarine", "wheat", "lightgray", "coral")


def to_dot_clusters(net: Network, tree: SpanTree, g, name: str = "clusters") -> str:
    """DOT rendering colored by declared head; arrows are parc pointers."""
    heads = sorted({s.headc for s in g})
    color = {h: _PALETTE[i % len(_PALETTE)] for i, h in enumerate(heads)}
    lines = [f"digraph {name} {{", "  node [style=filled];"]
    for p in net.all_nodes():
        s = g[p]
        shape = ", shape=doublecircle" if s.headc == s.id else ""
        lines.append(f'  {p} [label="{p}\\nid={s.id} a={s.alpha}\\n[{s.headc}]", '
                     f'fillcolor={color[s.headc]}{shape}];')
    for p, q in net.edges():
        lines.append(f"  {p} -> {q} [dir=none, color=gray];")
    for p in net.all_nodes():
        c = g[p].parc
        q = None if c is None else net.peer(p, c)
        if q is not None:
            lines.append(f"  {p} -> {q} [penwidth=2];")
    lines.append("}")
    return "\n".join(lines) + "\n"

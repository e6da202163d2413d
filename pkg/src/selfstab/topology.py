"""Network topology: bidirectional channel graphs and rooted spanning trees.

Nodes are dense indices 0..n-1. Each node addresses its neighbors through
local channel numbers 0..deg-1; channel c of node p leads to ``peers[p][c]``
and ``reply[p][c]`` is the channel at the other end that leads back to p.
Channels are numbered in ascending order of peer id, which fixes the strict
total channel order used by algorithms to break ties deterministically.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence


class TopologyError(ValueError):
    """Malformed graph input or an operation on an unsuitable graph."""


@dataclass(frozen=True)
class Network:
    """Immutable symmetric network with per-node channel tables.

    Invariants (established by the constructors in this module):
    simple graph, no self loops, edge (p,q) present iff (q,p) is, and the
    reply map round-trips: if ``peers[p][c] == q`` and ``reply[p][c] == c'``
    then ``peers[q][c'] == p`` and ``reply[q][c'] == c``.
    """

    peers: tuple[tuple[int, ...], ...]
    reply: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.peers)

    def all_nodes(self) -> range:
        return range(self.n)

    def degree(self, p: int) -> int:
        return len(self.peers[p])

    def channels(self, p: int) -> range:
        return range(len(self.peers[p]))

    def peer(self, p: int, c: int) -> Optional[int]:
        """Destination of channel c at node p, or None for an invalid name."""
        if 0 <= c < len(self.peers[p]):
            return self.peers[p][c]
        return None

    def channel_to(self, p: int, q: int) -> Optional[int]:
        """Channel of p leading to q, or None if they are not neighbors."""
        for c, r in enumerate(self.peers[p]):
            if r == q:
                return c
        return None

    def edges(self) -> Iterator[tuple[int, int]]:
        """Undirected edges, each reported once with p < q."""
        for p in self.all_nodes():
            for q in self.peers[p]:
                if p < q:
                    yield (p, q)


@dataclass(frozen=True)
class SpanTree:
    """Rooted spanning tree given by per-node parent channels.

    ``par[p]`` is the channel of p leading to its tree parent; the root is
    the unique node with ``par[root] is None``.
    """

    root: int
    par: tuple[Optional[int], ...]

    def parent(self, net: Network, p: int) -> Optional[int]:
        c = self.par[p]
        return None if c is None else net.peer(p, c)

    def children(self, net: Network, p: int) -> list[int]:
        return [q for q in net.peers[p]
                if self.par[q] is not None and net.peer(q, self.par[q]) == p]


def network_from_adjacency(adjacency: Sequence[Iterable[int]]) -> Network:
    """Build a Network from per-node neighbor sets.

    Neighbors are sorted ascending, which defines the channel numbering.
    """
    n = len(adjacency)
    nbr_sets = []
    for p, nbrs in enumerate(adjacency):
        s = set(nbrs)
        if p in s:
            raise TopologyError(f"self-loop at node {p}")
        for q in s:
            if not (0 <= q < n):
                raise TopologyError(f"edge endpoint {q} out of range at node {p}")
        nbr_sets.append(s)
    for p, s in enumerate(nbr_sets):
        for q in s:
            if p not in nbr_sets[q]:
                raise TopologyError(f"asymmetric edge ({p},{q})")
    peers = tuple(tuple(sorted(s)) for s in nbr_sets)
    back = [{q: c for c, q in enumerate(row)} for row in peers]
    reply = tuple(tuple(back[q][p] for q in peers[p]) for p in range(n))
    return Network(peers=peers, reply=reply)


def network_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Network:
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise TopologyError(f"self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise TopologyError(f"edge ({u},{v}) out of range for n={n}")
        adjacency[u].add(v)
        adjacency[v].add(u)
    return network_from_adjacency(adjacency)


def load_network(text: str) -> Network:
    """Parse an edge-list document: one "u v" per line, ``#`` comments.

    The symmetric closure of the listed edges is taken, listing both
    directions of an edge is harmless.  Node count is max index + 1 unless
    a ``# nodes: N`` comment raises it (needed for edgeless graphs); every
    index below the count must occur, gaps are rejected.
    """
    edges: list[tuple[int, int]] = []
    declared_n: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("nodes:"):
                try:
                    declared_n = int(body.split(":", 1)[1])
                except ValueError as exc:
                    raise TopologyError(f"line {lineno}: bad nodes directive") from exc
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: non-integer endpoint in {line!r}") from exc
        if u < 0 or v < 0:
            raise TopologyError(f"line {lineno}: negative node index")
        if u == v:
            raise TopologyError(f"line {lineno}: self-loop at node {u}")
        edges.append((u, v))

    seen = {u for e in edges for u in e}
    n = max(seen) + 1 if seen else 0
    if declared_n is not None:
        if declared_n < n:
            raise TopologyError(f"nodes directive {declared_n} below max index {n - 1}")
        n = declared_n
    missing = [p for p in range(n) if p not in seen]
    if missing and declared_n is None:
        raise TopologyError(f"node index gap: {missing[0]} never occurs")
    return network_from_edges(n, edges)


def dump_edge_list(net: Network) -> str:
    lines = [f"# nodes: {net.n}"]
    lines.extend(f"{p} {q}" for p, q in net.edges())
    return "\n".join(lines) + "\n"


def build_spanning_tree(net: Network, root: int) -> SpanTree:
    """BFS spanning tree rooted at ``root``; parent channels point rootward."""
    if not (0 <= root < net.n):
        raise TopologyError(f"root {root} out of range")
    par: list[Optional[int]] = [None] * net.n
    visited = [False] * net.n
    visited[root] = True
    queue = deque([root])
    while queue:
        p = queue.popleft()
        for c in net.channels(p):
            q = net.peers[p][c]
            if not visited[q]:
                visited[q] = True
                par[q] = net.reply[p][c]
                queue.append(q)
    for p in net.all_nodes():
        if not visited[p]:
            raise TopologyError(f"graph is disconnected: node {p} unreachable from {root}")
    return SpanTree(root=root, par=tuple(par))


@dataclass
class ValidationReport:
    """List of violated assumption clauses; empty means all hold."""

    violations: list[tuple[str, str]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def clause_ok(self, clause: str) -> bool:
        return all(c != clause for c, _ in self.violations)

    def __str__(self) -> str:
        if self.ok:
            return "all assumption clauses hold"
        return "\n".join(f"{clause}: {msg}" for clause, msg in self.violations)


def validate_assume(net: Network, tree: SpanTree,
                    ids: Sequence[int]) -> ValidationReport:
    """Recheck the standing assumptions: symmetric network, unique node
    identifiers, and a well-formed rooted spanning tree.

    Report-style: every violated clause is listed, nothing raises.
    """
    out: list[tuple[str, str]] = []

    for p in net.all_nodes():
        if len(set(net.peers[p])) != len(net.peers[p]):
            out.append(("sym_net", f"duplicate channels at node {p}"))
        for c in net.channels(p):
            q = net.peers[p][c]
            if q == p:
                out.append(("sym_net", f"self-loop at node {p}"))
                continue
            back = net.reply[p][c]
            if net.peer(q, back) != p or net.reply[q][back] != c:
                out.append(("sym_net", f"reply map broken on ({p},{q})"))

    if len(ids) != net.n:
        out.append(("unique_id", f"{len(ids)} identifiers for {net.n} nodes"))
    else:
        first: dict[int, int] = {}
        for p, ident in enumerate(ids):
            if ident in first:
                out.append(("unique_id",
                            f"nodes {first[ident]} and {p} share id {ident}"))
            else:
                first[ident] = p

    roots = [p for p in net.all_nodes() if tree.par[p] is None]
    if net.n and roots != [tree.root]:
        out.append(("span_tree",
                    f"nodes with no parent channel: {roots}, expected [{tree.root}]"))
    for p in net.all_nodes():
        c = tree.par[p]
        if c is not None and net.peer(p, c) is None:
            out.append(("span_tree", f"parent channel {c} invalid at node {p}"))
    # acyclicity: every node must reach the root by following parents
    for p in net.all_nodes():
        cur, hops = p, 0
        while tree.par[cur] is not None and hops <= net.n:
            nxt = tree.parent(net, cur)
            if nxt is None:
                break
            cur, hops = nxt, hops + 1
        if cur != tree.root or hops > net.n:
            out.append(("span_tree", f"node {p} does not reach root {tree.root}"))
    return ValidationReport(out)


GENERATOR_KINDS = ("path", "star", "ring-plus-chord", "random-tree", "random-connected")


def generate(kind: str, n: int, seed: int = 0) -> Network:
    """Deterministic graph generator; same (kind, n, seed) gives the same net."""
    if n < 1:
        raise TopologyError("n must be at least 1")
    rng = random.Random(f"gen/{kind}/{n}/{seed}")
    edges: list[tuple[int, int]] = []
    if kind == "path":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "star":
        edges = [(0, i) for i in range(1, n)]
    elif kind == "ring-plus-chord":
        if n <= 2:
            edges = [(i, i + 1) for i in range(n - 1)]
        else:
            edges = [(i, (i + 1) % n) for i in range(n)]
            if n >= 5:
                edges.append((0, n // 2))
    elif kind == "random-tree":
        edges = _random_tree_edges(n, rng)
    elif kind == "random-connected":
        edges = _random_tree_edges(n, rng)
        present = {frozenset(e) for e in edges}
        extra = n // 2
        attempts = 0
        while extra > 0 and attempts < 20 * n:
            attempts += 1
            u, v = rng.randrange(n), rng.randrange(n)
            if u == v or frozenset((u, v)) in present:
                continue
            present.add(frozenset((u, v)))
            edges.append((u, v))
            extra -= 1
    else:
        raise TopologyError(f"unknown generator kind {kind!r}")
    return network_from_edges(n, edges)


def _random_tree_edges(n: int, rng: random.Random) -> list[tuple[int, int]]:
    # uniform random attachment: node i hangs off a uniformly chosen earlier node
    return [(i, rng.randrange(i)) for i in range(1, n)]


def identity_ids(n: int) -> tuple[int, ...]:
    return tuple(range(n))


def permuted_ids(n: int, seed: int = 0) -> tuple[int, ...]:
    """A permutation of 0..n-1 as identifiers, for id-order independence tests."""
    perm = list(range(n))
    random.Random(f"ids/{n}/{seed}").shuffle(perm)
    return tuple(perm)


def to_dot(net: Network, tree: Optional[SpanTree] = None, name: str = "G") -> str:
    """DOT rendering of the network; spanning-tree edges are drawn bold."""
    tree_edges = set()
    if tree is not None:
        for p in net.all_nodes():
            q = tree.parent(net, p)
            if q is not None:
                tree_edges.add(frozenset((p, q)))
    lines = [f"graph {name} {{"]
    for p in net.all_nodes():
        lines.append(f"  {p};")
    for p, q in net.edges():
        attr = " [style=bold]" if frozenset((p, q)) in tree_edges else ""
        lines.append(f"  {p} -- {q}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Scheduling policies: legal behaviors of the distributed unfair daemon.

Every policy picks a nonempty subset of the currently enabled nodes; no
fairness is promised.  All randomness comes from the execution's RNG, so
a fixed (policy, seed) pair replays the same selection sequence.
"""

from __future__ import annotations

from typing import Optional

from selfstab.engine import SelectionContext


class DaemonError(ValueError):
    pass


class Daemon:
    name = "daemon"

    def reset(self) -> None:
        pass

    def select(self, enabled: frozenset[int], ctx: SelectionContext) -> frozenset[int]:
        raise NotImplementedError

    def _require(self, enabled: frozenset[int]) -> None:
        if not enabled:
            raise DaemonError("select called with an empty enabled set")


class SynchronousDaemon(Daemon):
    """Activates every enabled node."""

    name = "sync"

    def select(self, enabled, ctx):
        self._require(enabled)
        return enabled


class CentralRandomDaemon(Daemon):
    """Activates a single uniformly chosen enabled node."""

    name = "central"

    def select(self, enabled, ctx):
        self._require(enabled)
        return frozenset((ctx.rng.choice(sorted(enabled)),))


class RoundRobinDaemon(Daemon):
    """Central daemon cycling through node ids in increasing order."""

    name = "rr"

    def __init__(self):
        self._last: Optional[int] = None

    def reset(self):
        self._last = None

    def select(self, enabled, ctx):
        self._require(enabled)
        order = sorted(enabled)
        if self._last is not None:
            after = [p for p in order if p > self._last]
            if after:
                order = after
        pick = order[0]
        self._last = pick
        return frozenset((pick,))


class DistributedRandomDaemon(Daemon):
    """Keeps each enabled node with probability ``p_select``, resampling
    until the kept set is nonempty (with a uniform singleton fallback so
    degenerate probabilities still terminate)."""

    name = "random"

    def __init__(self, p_select: float = 0.5):
        if not 0.0 <= p_select <= 1.0:
            raise DaemonError(f"p_select must be in [0,1], got {p_select}")
        self.p_select = p_select

    def select(self, enabled, ctx):
        self._require(enabled)
        order = sorted(enabled)
        for _ in range(1000):
            kept = frozenset(p for p in order if ctx.rng.random() < self.p_select)
            if kept:
                return kept
        return frozenset((ctx.rng.choice(order),))


class LazyDaemon(Daemon):
    """Adversarial heuristic: activates the single node whose move disables
    the fewest currently enabled nodes (greedy starvation; ties to the
    smallest id).  A legal unfair behavior, not an exhaustive adversary."""

    name = "lazy"

    def select(self, enabled, ctx):
        self._require(enabled)
        return frozenset((min(sorted(enabled), key=lambda p: (ctx.newly_disabled(p), p)),))


def make_daemon(name: str) -> Daemon:
    """Parse a CLI daemon name: sync | central | rr | random[:<p>] | lazy."""
    if name == "sync":
        return SynchronousDaemon()
    if name == "central":
        return CentralRandomDaemon()
    if name == "rr":
        return RoundRobinDaemon()
    if name == "lazy":
        return LazyDaemon()
    if name == "random" or name.startswith("random:"):
        p = 0.5
        if ":" in name:
            try:
                p = float(name.split(":", 1)[1])
            except ValueError as exc:
                raise DaemonError(f"bad probability in {name!r}") from exc
        return DistributedRandomDaemon(p)
    raise DaemonError(f"unknown daemon {name!r} "
                      "(expected sync|central|rr|random:<p>|lazy)")

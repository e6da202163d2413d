"""Toolkit for simulating and verifying silent self-stabilizing algorithms.

The package implements the locally-shared-memory model with composite
atomicity (guarded-action state machines scheduled by an adversarial
daemon), a k-clustering algorithm over a rooted spanning tree, multiset
potential monitors that witness termination at runtime, structural
checkers for the clustering output, and an exhaustive small-instance
model checker.
"""

from selfstab.topology import Network, SpanTree, load_network, build_spanning_tree, generate
from selfstab.kcluster import CkState, CkAlgorithm
from selfstab.engine import execute, is_terminal
from selfstab.daemon import make_daemon

__all__ = [
    "Network",
    "SpanTree",
    "load_network",
    "build_spanning_tree",
    "generate",
    "CkState",
    "CkAlgorithm",
    "execute",
    "is_terminal",
    "make_daemon",
]

__version__ = "0.1.0"

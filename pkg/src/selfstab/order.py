"""Finite multisets of naturals and the Dershowitz-Manna well-founded order.

A multiset N is DM-smaller than M when M can be split as Z + X and N as
Z + Y with X nonempty and every element of Y strictly below some element
of X.  Over a total order this is decided by a simple characterization
(``dm_less``); the definitional partition search is kept alongside as an
independent oracle (``dm_less_partition_search``).

Per-step termination arguments use triples of multisets compared
lexicographically, plus two pointwise criteria on per-node potentials
that are sufficient for a DM decrease.
"""

from __future__ import annotations

from collections import Counter
from itertools import product
from typing import Iterable, NamedTuple, Optional, Sequence, Union


class NatMultiset:
    """Finite multiset of naturals in canonical sorted-multiplicity form."""

    __slots__ = ("_items",)

    def __init__(self, elements: Iterable[int] = ()):
        counts = Counter()
        for x in elements:
            if x < 0:
                raise ValueError(f"multiset elements must be naturals, got {x}")
            counts[x] += 1
        object.__setattr__(self, "_items", tuple(sorted(counts.items())))

    @classmethod
    def _from_items(cls, items: tuple[tuple[int, int], ...]) -> "NatMultiset":
        ms = cls.__new__(cls)
        object.__setattr__(ms, "_items", items)
        return ms

    def counts(self) -> dict[int, int]:
        return dict(self._items)

    def count(self, value: int) -> int:
        for v, c in self._items:
            if v == value:
                return c
        return 0

    def support(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self._items)

    def size(self) -> int:
        return sum(c for _, c in self._items)

    def elements(self) -> list[int]:
        out: list[int] = []
        for v, c in self._items:
            out.extend([v] * c)
        return out

    def add(self, other: "NatMultiset") -> "NatMultiset":
        c = Counter(dict(self._items))
        c.update(dict(other._items))
        return NatMultiset._from_items(tuple(sorted(c.items())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NatMultiset) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        return f"NatMultiset({self.elements()!r})"


MultisetLike = Union[NatMultiset, Iterable[int]]


def _as_ms(m: MultisetLike) -> NatMultiset:
    return m if isinstance(m, NatMultiset) else NatMultiset(m)


def ms_equal(n: MultisetLike, m: MultisetLike) -> bool:
    """Equality of multiplicity functions (order-insensitive)."""
    return _as_ms(n) == _as_ms(m)


def dm_less(n: MultisetLike, m: MultisetLike) -> bool:
    """Strict Dershowitz-Manna order: is N smaller than M?

    Characterization over the numeric total order: N differs from M, and
    wherever N gained multiplicity there is a strictly larger value where
    M has more.  Equivalent to the partition definition, which
    ``dm_less_partition_search`` decides directly.
    """
    nc, mc = _as_ms(n).counts(), _as_ms(m).counts()
    if nc == mc:
        return False
    values = sorted(set(nc) | set(mc), reverse=True)
    removed_above = False  # seen w with M(w) > N(w) among larger values
    for v in values:
        nv, mv = nc.get(v, 0), mc.get(v, 0)
        if nv > mv and not removed_above:
            return False
        if mv > nv:
            removed_above = True
    return True


def dm_less_partition_search(n: MultisetLike, m: MultisetLike) -> bool:
    """Definitional decision of the DM order by enumerating partitions.

    Searches all splits M = Z + X with X nonempty, takes Y = N - Z, and
    accepts when every element of Y is strictly below some element of X.
    Exponential; intended as a test oracle on small multisets.
    """
    nms, mms = _as_ms(n), _as_ms(m)
    nc = nms.counts()
    mvals = mms.support()
    ranges = [range(mms.count(v) + 1) for v in mvals]
    for take in product(*ranges):
        if not any(take):
            continue  # X must be nonempty
        x = {v: t for v, t in zip(mvals, take) if t}
        z = {v: mms.count(v) - t for v, t in zip(mvals, take) if mms.count(v) > t}
        # N must contain Z; the rest of N is Y
        if any(nc.get(v, 0) < c for v, c in z.items()):
            continue
        y = Counter(nc)
        y.subtract(z)
        y = +y
        xmax = max(x)
        if all(v < xmax for v in y):
            return True
    return False


class MeasureTriple(NamedTuple):
    """Per-configuration global measure: one multiset per prioritized action."""

    pot_alpha: NatMultiset
    pot_parc: NatMultiset
    pot_headc: NatMultiset


def lex_less(a: MeasureTriple, b: MeasureTriple) -> bool:
    """Strict lexicographic order on measure triples (DM componentwise)."""
    if dm_less(a.pot_alpha, b.pot_alpha):
        return True
    if not ms_equal(a.pot_alpha, b.pot_alpha):
        return False
    if dm_less(a.pot_parc, b.pot_parc):
        return True
    if not ms_equal(a.pot_parc, b.pot_parc):
        return False
    return dm_less(a.pot_headc, b.pot_headc)


class CriteriaVerdict(NamedTuple):
    status: str  # "ok" | "local-violation" | "global-violation"
    witness: Optional[int]  # offending node for a local violation

    @property
    def ok(self) -> bool:
        return self.status == "ok"


CRITERIA_OK = CriteriaVerdict("ok", None)


def check_criteria(pot_before: Sequence[int], pot_after: Sequence[int]) -> CriteriaVerdict:
    """Check the two per-node decrease criteria on a potential map pair.

    Local criterion: every node whose potential rose has a witness node
    whose potential changed and whose old value exceeds the riser's new
    value.  Global criterion: some node's potential changed at all.
    Together (see ``dm_less``) they force a DM decrease of the multiset.
    """
    if len(pot_before) != len(pot_after):
        raise ValueError("potential maps must cover the same nodes")
    changed = [p for p in range(len(pot_before)) if pot_before[p] != pot_after[p]]
    for p in range(len(pot_before)):
        if pot_before[p] < pot_after[p]:
            if not any(pot_after[p] < pot_before[w] for w in changed):
                return CriteriaVerdict("local-violation", p)
    if not changed:
        return CriteriaVerdict("global-violation", None)
    return CRITERIA_OK

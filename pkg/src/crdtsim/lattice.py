"""Join-semilattice replicated state: grow-only counter, add-wins set,
grow-only flag map, pair, and a fixed-length task-map sequence.

All states are immutable values: mutators return ``(new_state, delta)``
pairs, where the delta is a fragment of the same variant satisfying
``join(state, delta) == new_state``. Joins are associative, commutative
and idempotent, so replicas converge regardless of delivery order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Union

ActorId = str

# Set elements are strings, integers, or tuples of elements.
Element = Union[str, int, tuple]


def element_bytes(e: Element) -> bytes:
    """Canonical byte form of a set element; also the deterministic sort key."""
    if isinstance(e, str):
        raw = e.encode("utf-8")
        return b"s" + struct.pack(">I", len(raw)) + raw
    if isinstance(e, bool):
        raise TypeError("boolean set elements are not supported")
    if isinstance(e, int):
        return b"i" + struct.pack(">q", e)
    if isinstance(e, tuple):
        return b"t" + struct.pack(">I", len(e)) + b"".join(element_bytes(x) for x in e)
    raise TypeError(f"unsupported element type: {type(e).__name__}")


class Dot(NamedTuple):
    """Unique event tag: the ``seq``-th event issued by ``actor``."""

    actor: ActorId
    seq: int


@dataclass(slots=True)
class CausalContext:
    """Set of observed dots: per-actor contiguous maximum plus sparse cloud.

    ``maxima[a] = n`` states that every dot (a, 1..n) has been observed;
    ``cloud`` holds observed dots not (yet) absorbed by a maximum. Kept
    compact: no cloud dot is ever covered by a maximum.
    """

    maxima: dict[ActorId, int] = field(default_factory=dict)
    cloud: frozenset[Dot] = frozenset()

    def __contains__(self, dot: Dot) -> bool:
        return dot.seq <= self.maxima.get(dot.actor, 0) or dot in self.cloud

    def next_seq(self, actor: ActorId) -> int:
        top = self.maxima.get(actor, 0)
        for d in self.cloud:
            if d.actor == actor and d.seq > top:
                top = d.seq
        return top + 1

    def covers(self, other: "CausalContext") -> bool:
        for actor, n in other.maxima.items():
            if n > self.maxima.get(actor, 0):
                return False
        return all(d in self for d in other.cloud)


def _compact(maxima: dict[ActorId, int], cloud: set[Dot]) -> CausalContext:
    by_actor: dict[ActorId, set[int]] = {}
    for d in cloud:
        by_actor.setdefault(d.actor, set()).add(d.seq)
    for actor, seqs in by_actor.items():
        n = maxima.get(actor, 0)
        while n + 1 in seqs:
            n += 1
        if n:
            maxima[actor] = n
    kept = frozenset(d for d in cloud if d.seq > maxima.get(d.actor, 0))
    return CausalContext(maxima, kept)


def context_from_dots(dots) -> CausalContext:
    return _compact({}, set(dots))


def context_union(a: CausalContext, b: CausalContext) -> CausalContext:
    maxima = dict(a.maxima)
    for actor, n in b.maxima.items():
        if n > maxima.get(actor, 0):
            maxima[actor] = n
    return _compact(maxima, set(a.cloud) | set(b.cloud))


@dataclass(slots=True)
class GCounter:
    """Grow-only counter: per-actor counts, value = sum, join = pointwise max."""

    entries: dict[ActorId, int] = field(default_factory=dict)


@dataclass(slots=True)
class AWSet:
    """Add-wins set over a dot store and causal context.

    An element is a member iff its dot set is non-empty. Removal clears
    the element's observed dots; the removal travels as context-only
    state, so a concurrently added (unobserved) dot survives the join.
    """

    dots: dict[Element, frozenset[Dot]] = field(default_factory=dict)
    context: CausalContext = field(default_factory=CausalContext)


@dataclass(slots=True)
class GMap:
    """Grow-only map from string keys to flags; join is key union with OR."""

    entries: dict[str, bool] = field(default_factory=dict)


@dataclass(slots=True)
class Pair:
    """Product of two lattices; join is componentwise."""

    first: "LatticeState"
    second: "LatticeState"


@dataclass(slots=True)
class Workflow:
    """Fixed-length sequence of grow-only flag maps, joined elementwise.

    Same lattice as right-nested pairs of flag maps; the flat tuple keeps
    task indexing direct.
    """

    tasks: tuple[GMap, ...]


LatticeState = Union[GCounter, AWSet, GMap, Pair, Workflow]
# A delta is a state fragment of the same variant.
Delta = LatticeState


# ---------------------------------------------------------------- join

def join(a: LatticeState, b: LatticeState) -> LatticeState:
    """Least upper bound of two states of the same variant.

    Returns ``a`` itself when ``b`` carries nothing new, so callers can
    use identity to detect no-op merges. Variant mismatch is a
    programming error and raises ``TypeError``.
    """
    ta = type(a)
    if ta is not type(b):
        raise TypeError(f"cannot join {ta.__name__} with {type(b).__name__}")
    if ta is GCounter:
        return _join_gcounter(a, b)
    if ta is AWSet:
        return _join_awset(a, b)
    if ta is GMap:
        return _join_gmap(a, b)
    if ta is Pair:
        f = join(a.first, b.first)
        s = join(a.second, b.second)
        return a if f is a.first and s is a.second else Pair(f, s)
    if ta is Workflow:
        if len(a.tasks) != len(b.tasks):
            raise TypeError("cannot join workflows of different task counts")
        tasks = tuple(_join_gmap(x, y) for x, y in zip(a.tasks, b.tasks))
        return a if all(t is x for t, x in zip(tasks, a.tasks)) else Workflow(tasks)
    raise TypeError(f"not a lattice state: {ta.__name__}")


def _join_gcounter(a: GCounter, b: GCounter) -> GCounter:
    ae = a.entries
    be = b.entries
    get = ae.get
    for k, v in be.items():
        if v > get(k, 0):
            break
    else:
        return a
    merged = dict(ae)
    for k, v in be.items():
        if v > merged.get(k, 0):
            merged[k] = v
    return GCounter(merged)


def _join_gmap(a: GMap, b: GMap) -> GMap:
    ae = a.entries
    be = b.entries
    for k, v in be.items():
        if k not in ae or (v and not ae[k]):
            break
    else:
        return a
    merged = dict(ae)
    for k, v in be.items():
        if v:
            merged[k] = True
        else:
            merged.setdefault(k, False)
    return GMap(merged)


def _join_awset(a: AWSet, b: AWSet) -> AWSet:
    # Fast path: b is contained in a (joining it back changes nothing).
    if a.context.covers(b.context):
        contained = True
        for e, da in a.dots.items():
            db = b.dots.get(e)
            if db is None:
                if any(d in b.context for d in da):
                    contained = False
                    break
            elif not (da <= db or all(d in db or d not in b.context for d in da)):
                contained = False
                break
        if contained and all(
            db <= a.dots.get(e, frozenset()) or all(d in a.context for d in db)
            for e, db in b.dots.items()
        ):
            return a
    store: dict[Element, frozenset[Dot]] = {}
    for e, da in a.dots.items():
        db = b.dots.get(e, frozenset())
        keep = (da & db) | {d for d in da - db if d not in b.context}
        keep |= {d for d in db - da if d not in a.context}
        if keep:
            store[e] = frozenset(keep)
    for e, db in b.dots.items():
        if e in a.dots:
            continue
        keep = frozenset(d for d in db if d not in a.context)
        if keep:
            store[e] = keep
    return AWSet(store, context_union(a.context, b.context))


def bottom_like(state: LatticeState) -> LatticeState:
    """Empty state of the same variant (and shape, for pairs/workflows)."""
    t = type(state)
    if t is GCounter:
        return GCounter()
    if t is AWSet:
        return AWSet()
    if t is GMap:
        return GMap()
    if t is Pair:
        return Pair(bottom_like(state.first), bottom_like(state.second))
    if t is Workflow:
        return Workflow(tuple(GMap() for _ in state.tasks))
    raise TypeError(f"not a lattice state: {t.__name__}")


# ------------------------------------------------------------- mutators

def gcounter_increment(
    state: GCounter, actor: ActorId, amount: int = 1
) -> tuple[GCounter, GCounter]:
    if amount < 1:
        raise ValueError(f"increment must be >= 1, got {amount}")
    total = state.entries.get(actor, 0) + amount
    merged = dict(state.entries)
    merged[actor] = total
    return GCounter(merged), GCounter({actor: total})


def gcounter_value(state: GCounter) -> int:
    return sum(state.entries.values())


def awset_add(state: AWSet, actor: ActorId, element: Element) -> tuple[AWSet, AWSet]:
    dot = Dot(actor, state.context.next_seq(actor))
    store = dict(state.dots)
    store[element] = store.get(element, frozenset()) | {dot}
    new = AWSet(store, context_union(state.context, context_from_dots([dot])))
    delta = AWSet({element: frozenset([dot])}, context_from_dots([dot]))
    return new, delta


def awset_remove(state: AWSet, element: Element) -> tuple[AWSet, AWSet]:
    observed = state.dots.get(element)
    if not observed:
        return state, AWSet()
    store = dict(state.dots)
    del store[element]
    return AWSet(store, state.context), AWSet({}, context_from_dots(observed))


def awset_contains(state: AWSet, element: Element) -> bool:
    return bool(state.dots.get(element))


def awset_elements(state: AWSet) -> list[Element]:
    """Members in canonical (encoded-byte) order."""
    return sorted(state.dots, key=element_bytes)


def gmap_set_true(state: GMap, key: str) -> tuple[GMap, GMap]:
    if state.entries.get(key, False):
        return state, GMap({key: True})
    merged = dict(state.entries)
    merged[key] = True
    return GMap(merged), GMap({key: True})

"""Shared randomized-state builders and a membership-only overlay harness.

The builders generate lattice states through real mutation traces (with
forks and cross-joins for the causal set) so every generated state is
reachable by the protocol and satisfies the structural invariants.
Property tests feed them integer seeds; the acceptance suite drives the
same builders in counted loops.
"""

from __future__ import annotations

import random

import pytest

from crdtsim.lattice import (
    AWSet,
    GCounter,
    GMap,
    Pair,
    Workflow,
    awset_add,
    awset_remove,
    gcounter_increment,
    gmap_set_true,
    join,
)
from crdtsim.overlay import (
    HpvParams,
    MembershipView,
    hpv_handle,
    is_single_component,
    make_shuffle,
    rejoin_if_isolated,
)
from crdtsim.workflow import mark_complete, wcrdt_new

ACTORS = ["a", "b", "c", "d", "e"]
ELEMENTS = ["x", "y", "z", "w", 1, 2, ("p", 3)]
KEYS = ["n1", "n2", "n3", "n4", "n5"]


def rand_gcounter(rng: random.Random) -> GCounter:
    actors = rng.sample(ACTORS, rng.randint(0, len(ACTORS)))
    return GCounter({a: rng.randint(1, 40) for a in actors})


def rand_gmap(rng: random.Random) -> GMap:
    keys = rng.sample(KEYS, rng.randint(0, len(KEYS)))
    return GMap({k: True for k in keys})


def mutate_awset(state: AWSet, rng: random.Random) -> AWSet:
    if state.dots and rng.random() < 0.4:
        element = rng.choice(sorted(state.dots, key=repr))
        return awset_remove(state, element)[0]
    return awset_add(state, rng.choice(ACTORS), rng.choice(ELEMENTS))[0]


def rand_awset_triple(rng: random.Random) -> tuple[AWSet, AWSet, AWSet]:
    """Three states forked from a common ancestor, possibly entangled."""
    base = AWSet()
    for _ in range(rng.randint(0, 4)):
        base = mutate_awset(base, rng)
    out = []
    for _ in range(3):
        state = base
        for _ in range(rng.randint(0, 5)):
            state = mutate_awset(state, rng)
        out.append(state)
    if rng.random() < 0.5:
        out[0] = join(out[0], out[1])
    return tuple(out)


def rand_awset(rng: random.Random) -> AWSet:
    return rand_awset_triple(rng)[0]


def rand_workflow(rng: random.Random, tasks: int = 4) -> Workflow:
    w = wcrdt_new(tasks)
    for _ in range(rng.randint(0, 8)):
        w = mark_complete(w, rng.randrange(tasks), rng.choice(KEYS))[0]
    return w


def rand_pair(rng: random.Random) -> Pair:
    return Pair(rand_gcounter(rng), rand_gmap(rng))


def rand_triple(variant: str, rng: random.Random):
    if variant == "gcounter":
        return tuple(rand_gcounter(rng) for _ in range(3))
    if variant == "gmap":
        return tuple(rand_gmap(rng) for _ in range(3))
    if variant == "awset":
        return rand_awset_triple(rng)
    if variant == "pair":
        return tuple(rand_pair(rng) for _ in range(3))
    if variant == "workflow":
        return tuple(rand_workflow(rng) for _ in range(3))
    raise ValueError(variant)


def rand_mutation(variant: str, rng: random.Random):
    """A (state, mutator) pair; the mutator returns (new_state, delta)."""
    if variant == "gcounter":
        state = rand_gcounter(rng)
        actor, amount = rng.choice(ACTORS), rng.randint(1, 9)
        return state, lambda s: gcounter_increment(s, actor, amount)
    if variant == "gmap":
        state = rand_gmap(rng)
        key = rng.choice(KEYS)
        return state, lambda s: gmap_set_true(s, key)
    if variant == "awset":
        state = rand_awset(rng)
        if state.dots and rng.random() < 0.4:
            element = rng.choice(sorted(state.dots, key=repr))
            return state, lambda s: awset_remove(s, element)
        actor, element = rng.choice(ACTORS), rng.choice(ELEMENTS)
        return state, lambda s: awset_add(s, actor, element)
    if variant == "workflow":
        state = rand_workflow(rng)
        task, node = rng.randrange(len(state.tasks)), rng.choice(KEYS)
        return state, lambda s: mark_complete(s, task, node)
    raise ValueError(variant)


MUTABLE_VARIANTS = ("gcounter", "gmap", "awset", "workflow")
ALL_VARIANTS = ("gcounter", "gmap", "awset", "pair", "workflow")


# ----------------------------------------------------------------- overlay

def _stable(seed, *parts) -> int:
    import hashlib

    text = "|".join(str(p) for p in (seed,) + parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


class OverlayHarness:
    """Membership-only tick loop: joins, shuffles, isolation repair.

    Drives the overlay handlers directly with unit message latency, one
    scheduled join per tick through a single contact node.
    """

    def __init__(self, node_ids, seed=1, params=None, join_stagger=True):
        self.params = params or HpvParams()
        self.ids = sorted(node_ids)
        self.contact = self.ids[0]
        self.views = {n: MembershipView(n) for n in self.ids}
        self.rngs = {n: random.Random(_stable(seed, n)) for n in self.ids}
        self.tick = 0
        self.seq = 0
        self.queue: dict[int, list] = {}
        self.joined = {self.contact}
        order = [n for n in self.ids if n != self.contact]
        random.Random(_stable(seed, "order")).shuffle(order)
        self.join_at = {n: (i + 1 if join_stagger else 1) for i, n in enumerate(order)}

    def send(self, sender, dest, msg):
        self.seq += 1
        self.queue.setdefault(self.tick + 1, []).append((self.seq, dest, msg))

    def deliver_due(self):
        for seq, dest, msg in sorted(self.queue.pop(self.tick, ()), key=lambda e: (e[1], e[0])):
            self.views[dest], out = hpv_handle(
                self.views[dest], msg, self.params, self.rngs[dest]
            )
            for nxt, m in out:
                self.send(dest, nxt, m)

    def step(self):
        from crdtsim.overlay import MembershipMsg

        self.deliver_due()
        for node, when in self.join_at.items():
            if when == self.tick:
                self.joined.add(node)
                self.send(node, self.contact, MembershipMsg("join", node))
        if self.tick % 5 == 0:
            for node in self.ids:
                if node in self.joined and node != self.contact and not self.views[node].active:
                    for dest, msg in rejoin_if_isolated(
                        self.views[node], set(self.ids), self.rngs[node]
                    ):
                        self.send(node, dest, msg)
        if self.tick > 0 and self.tick % self.params.shuffle_interval == 0:
            from crdtsim.overlay import maintain_active

            for node in self.ids:
                if node in self.joined:
                    view, rng = self.views[node], self.rngs[node]
                    for dest, msg in make_shuffle(view, self.params, rng):
                        self.send(node, dest, msg)
                    for dest, msg in maintain_active(view, self.params, rng):
                        self.send(node, dest, msg)
        self.tick += 1

    def connected(self) -> bool:
        return is_single_component(self.views, set(self.ids))

    def run_until_connected(self, max_ticks: int) -> int | None:
        for _ in range(max_ticks):
            if self.connected():
                return self.tick
            self.step()
        return self.tick if self.connected() else None


@pytest.fixture
def rng():
    return random.Random(12345)

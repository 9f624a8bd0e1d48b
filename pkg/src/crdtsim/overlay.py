"""Cluster topologies: a static client/server star and a partial-view
gossip membership protocol, plus the connectedness analysis and rejoin
rule the simulator uses to gate and repair experiments.

The partial-view protocol keeps a small symmetric active view used for
dissemination and a larger passive view used for repair. Handlers are
pure: they take a view and a message and return the updated view plus
outgoing (destination, message) pairs. All random choices draw from the
caller's seeded generator over sorted candidates, so runs replay
byte-identically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .lattice import ActorId
from .encoding import utf8_len

MSG_KINDS = ("join", "forward_join", "neighbor", "disconnect", "shuffle", "shuffle_reply")
_MSG_TAG = {kind: i + 1 for i, kind in enumerate(MSG_KINDS)}


class OverlayError(ValueError):
    pass


@dataclass(slots=True)
class HpvParams:
    active_max: int = 5
    passive_max: int = 30
    arwl: int = 6
    prwl: int = 3
    shuffle_interval: int = 10
    shuffle_active_sample: int = 3
    shuffle_passive_sample: int = 4

    def validate(self) -> None:
        numbers = (
            self.active_max,
            self.passive_max,
            self.arwl,
            self.prwl,
            self.shuffle_interval,
            self.shuffle_active_sample,
            self.shuffle_passive_sample,
        )
        if any(v < 1 for v in numbers):
            raise OverlayError("membership parameters must be positive")
        if self.prwl > self.arwl:
            raise OverlayError("passive walk length must not exceed active walk length")


@dataclass(slots=True)
class MembershipMsg:
    kind: str
    sender: ActorId
    joiner: ActorId | None = None
    ttl: int = 0
    high_priority: bool = False
    confirm: bool = False  # neighbor: accept notice rather than a request
    sample: tuple[ActorId, ...] = ()

    def wire_size(self) -> int:
        if self.kind not in _MSG_TAG:
            raise OverlayError(f"unknown membership message kind {self.kind!r}")
        n = 1 + 4 + utf8_len(self.sender)
        if self.kind == "forward_join":
            n += 4 + utf8_len(self.joiner) + 1
        if self.kind == "neighbor":
            n += 1  # priority and confirm flags share one byte
        if self.kind in ("shuffle", "shuffle_reply"):
            n += 4 + sum(4 + utf8_len(p) for p in self.sample)
        return n


@dataclass(slots=True)
class MembershipView:
    owner: ActorId
    active: set[ActorId] = field(default_factory=set)
    passive: set[ActorId] = field(default_factory=set)

    def check_bounds(self, params: HpvParams) -> None:
        assert self.owner not in self.active and self.owner not in self.passive
        assert not self.active & self.passive
        assert len(self.active) <= params.active_max
        assert len(self.passive) <= params.passive_max


Outgoing = list[tuple[ActorId, MembershipMsg]]


# ------------------------------------------------------------ topologies

def build_star(server: ActorId, clients: set[ActorId]) -> dict[ActorId, MembershipView]:
    """Static datacenter topology: clients connect only to the server."""
    if not clients:
        raise OverlayError("star topology needs at least one client")
    if server in clients:
        raise OverlayError("server cannot be its own client")
    views = {server: MembershipView(server, active=set(clients))}
    for c in clients:
        views[c] = MembershipView(c, active={server})
    return views


# --------------------------------------------------- partial-view gossip

def _add_active(
    view: MembershipView, peer: ActorId, params: HpvParams, rng: random.Random
) -> tuple[MembershipView, Outgoing]:
    """Add a peer to the active view, evicting a random member if full."""
    if peer == view.owner or peer in view.active:
        return view, []
    out: Outgoing = []
    active = set(view.active)
    passive = set(view.passive)
    passive.discard(peer)
    if len(active) >= params.active_max:
        evicted = rng.choice(sorted(active))
        active.discard(evicted)
        passive = _into_passive(passive, evicted, active, view.owner, params, rng)
        out.append((evicted, MembershipMsg("disconnect", view.owner)))
    active.add(peer)
    return replace(view, active=active, passive=passive), out


def _into_passive(
    passive: set[ActorId],
    peer: ActorId,
    active: set[ActorId],
    owner: ActorId,
    params: HpvParams,
    rng: random.Random,
) -> set[ActorId]:
    if peer == owner or peer in active or peer in passive:
        return passive
    passive = set(passive)
    if len(passive) >= params.passive_max:
        passive.discard(rng.choice(sorted(passive)))
    passive.add(peer)
    return passive


def hpv_handle(
    view: MembershipView,
    msg: MembershipMsg,
    params: HpvParams,
    rng: random.Random,
) -> tuple[MembershipView, Outgoing]:
    kind = msg.kind
    if kind == "join":
        return _on_join(view, msg, params, rng)
    if kind == "forward_join":
        return _on_forward_join(view, msg, params, rng)
    if kind == "neighbor":
        return _on_neighbor(view, msg, params, rng)
    if kind == "disconnect":
        active = set(view.active)
        if msg.sender in active:
            active.discard(msg.sender)
            passive = _into_passive(
                view.passive, msg.sender, active, view.owner, params, rng
            )
            view = replace(view, active=active, passive=passive)
            # Reactive replacement keeps the overlay from thinning out:
            # ask a passive peer (not the one that dropped us) to step in.
            return view, _refill_request(view, rng, exclude=(msg.sender,))
        return view, []
    if kind == "shuffle":
        return _on_shuffle(view, msg, params, rng)
    if kind == "shuffle_reply":
        return _integrate_sample(view, msg.sample, params, rng), []
    raise OverlayError(f"unknown membership message kind {kind!r}")


def _on_join(view, msg, params, rng):
    joiner = msg.sender
    out: Outgoing = []
    if joiner not in view.active and joiner != view.owner:
        peers = sorted(view.active)
        view, out = _add_active(view, joiner, params, rng)
        fwd = MembershipMsg("forward_join", view.owner, joiner=joiner, ttl=params.arwl)
        out.extend((p, fwd) for p in peers if p != joiner)
    # Symmetric link back to the joiner, so a two-node cluster works and
    # retries of the same join stay idempotent.
    out.append((joiner, MembershipMsg("neighbor", view.owner, confirm=True)))
    return view, out


def _on_forward_join(view, msg, params, rng):
    joiner = msg.joiner
    if joiner == view.owner or joiner in view.active:
        return view, []
    candidates = sorted(view.active - {msg.sender, joiner})
    if msg.ttl == 0 or len(view.active) <= 1 or not candidates:
        view, out = _add_active(view, joiner, params, rng)
        out.append((joiner, MembershipMsg("neighbor", view.owner, confirm=True)))
        return view, out
    passive = view.passive
    if msg.ttl == params.prwl:
        passive = _into_passive(passive, joiner, view.active, view.owner, params, rng)
        view = replace(view, passive=passive)
    nxt = rng.choice(candidates)
    fwd = MembershipMsg("forward_join", view.owner, joiner=joiner, ttl=msg.ttl - 1)
    return view, [(nxt, fwd)]


def _on_neighbor(view, msg, params, rng):
    peer = msg.sender
    if peer == view.owner:
        return view, []
    if msg.confirm:
        # The peer accepted our request (or a join) and holds the edge.
        # Take it only if there is room; otherwise tell them to drop it.
        if peer in view.active:
            return view, []
        if len(view.active) >= params.active_max:
            return view, [(peer, MembershipMsg("disconnect", view.owner))]
        view, out = _add_active(view, peer, params, rng)
        return view, out
    if peer in view.active:
        # Already linked on our side; confirm so the requester links too.
        return view, [(peer, MembershipMsg("neighbor", view.owner, confirm=True))]
    if not msg.high_priority and len(view.active) >= params.active_max:
        return view, []  # low-priority request at a full view is dropped
    view, out = _add_active(view, peer, params, rng)
    out.append((peer, MembershipMsg("neighbor", view.owner, confirm=True)))
    return view, out


def _on_shuffle(view, msg, params, rng):
    view = _integrate_sample(view, msg.sample + (msg.sender,), params, rng)
    reply_size = min(len(msg.sample) + 1, len(view.passive))
    reply = tuple(rng.sample(sorted(view.passive), reply_size))
    return view, [(msg.sender, MembershipMsg("shuffle_reply", view.owner, sample=reply))]


def _integrate_sample(view, sample, params, rng):
    passive = view.passive
    for peer in sample:
        passive = _into_passive(passive, peer, view.active, view.owner, params, rng)
    return view if passive is view.passive else replace(view, passive=passive)


def _refill_request(
    view: MembershipView, rng: random.Random, exclude=()
) -> Outgoing:
    candidates = sorted(view.passive - set(exclude))
    if not candidates:
        return []
    target = rng.choice(candidates)
    priority = not view.active
    return [(target, MembershipMsg("neighbor", view.owner, high_priority=priority))]


def maintain_active(
    view: MembershipView, params: HpvParams, rng: random.Random
) -> Outgoing:
    """Periodic repair: promote a passive peer while the active view is
    under capacity."""
    if len(view.active) >= params.active_max:
        return []
    return _refill_request(view, rng)


def make_shuffle(
    view: MembershipView, params: HpvParams, rng: random.Random
) -> Outgoing:
    """Originate one passive-view exchange with a random active peer."""
    if not view.active:
        return []
    target = rng.choice(sorted(view.active))
    others = sorted(view.active - {target})
    sample = rng.sample(others, min(params.shuffle_active_sample, len(others)))
    sample += rng.sample(
        sorted(view.passive), min(params.shuffle_passive_sample, len(view.passive))
    )
    return [(target, MembershipMsg("shuffle", view.owner, sample=tuple(sample)))]


def hpv_on_failure(
    view: MembershipView, failed: ActorId, params: HpvParams, rng: random.Random
) -> tuple[MembershipView, Outgoing]:
    """Reactive repair: drop a failed active peer and ask a passive one in."""
    if failed not in view.active:
        return view, []
    active = set(view.active)
    active.discard(failed)
    passive = set(view.passive)
    passive.discard(failed)
    view = replace(view, active=active, passive=passive)
    return view, _refill_request(view, rng)


def rejoin_if_isolated(
    view: MembershipView, directory: set[ActorId], rng: random.Random
) -> Outgoing:
    """Emit one join to a directory member when the active view is empty."""
    if view.active:
        return []
    candidates = sorted(directory - {view.owner})
    if not candidates:
        raise OverlayError("cannot rejoin: the node directory is empty")
    return [(rng.choice(candidates), MembershipMsg("join", view.owner))]


# --------------------------------------------------------------- analysis

def overlay_adjacency(views: dict[ActorId, MembershipView]) -> dict[ActorId, set[ActorId]]:
    """Undirected graph: an edge exists if either side lists the other."""
    adj: dict[ActorId, set[ActorId]] = {n: set() for n in views}
    for node, view in views.items():
        for peer in view.active:
            if peer in adj:
                adj[node].add(peer)
                adj[peer].add(node)
    return adj


def is_single_component(views: dict[ActorId, MembershipView], expected: set[ActorId]) -> bool:
    """True iff the overlay over exactly the expected nodes is connected."""
    if not expected:
        return True
    if not expected <= set(views):
        return False
    adj = overlay_adjacency({n: v for n, v in views.items() if n in expected})
    start = min(expected)
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for peer in adj[node]:
            if peer not in seen:
                seen.add(peer)
                frontier.append(peer)
    return seen == expected


def diameter(views: dict[ActorId, MembershipView]) -> int:
    """Exact diameter via breadth-first search from every node."""
    adj = overlay_adjacency(views)
    nodes = sorted(adj)
    if len(nodes) <= 1:
        return 0
    worst = 0
    for src in nodes:
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt: list[ActorId] = []
            for node in frontier:
                for peer in adj[node]:
                    if peer not in dist:
                        dist[peer] = dist[node] + 1
                        nxt.append(peer)
            frontier = nxt
        if len(dist) != len(nodes):
            raise OverlayError("diameter of a disconnected overlay is undefined")
        worst = max(worst, max(dist.values()))
    return worst

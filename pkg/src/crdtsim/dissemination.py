"""State-based and delta-based anti-entropy over a node's active view.

State mode sends every source variable's full state to every active
peer each propagation interval. Delta mode buffers state fragments
(local mutations and novel received fragments, for transitive relay)
in a per-variable log with strictly increasing sequence numbers, sends
each peer one group joining everything above that peer's cumulative
ack, and discards entries once every current peer has acknowledged
them. A peer whose ack falls behind the compacted log prefix can no
longer be served contiguously; after a few such intervals the sender
falls back to a full state stamped with the log's high-water mark,
whose ack repairs the delta flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataflow import Store
from .encoding import state_size, utf8_len
from .lattice import ActorId, Delta, LatticeState, join
from .overlay import MembershipMsg

FULL_STATE = "full_state"
DELTA_GROUP = "delta_group"
ACK = "ack"
MEMBERSHIP = "membership_control"

_PAYLOAD_TAG = {FULL_STATE: 1, DELTA_GROUP: 2, ACK: 3, MEMBERSHIP: 4}


@dataclass(slots=True)
class Payload:
    kind: str
    sender: ActorId
    receiver: ActorId
    var_id: str = ""
    body: LatticeState | MembershipMsg | None = None
    seq_start: int = 0  # delta_group: first sequence covered
    seq_end: int = 0  # delta_group: last covered; ack: acknowledged sequence
    upto_seq: int | None = None  # full_state fallback high-water mark
    instrumented: bool = True
    size_hint: int | None = None  # precomputed wire size (senders cache state sizes)

    def wire_size(self) -> int:
        if self.size_hint is not None:
            return self.size_hint
        if self.kind == MEMBERSHIP:
            return 1 + self.body.wire_size()
        n = 1 + 4 + utf8_len(self.var_id)
        if self.kind == FULL_STATE:
            n += state_size(self.body)
            if self.upto_seq is not None:
                n += 8
        elif self.kind == DELTA_GROUP:
            n += 16 + state_size(self.body)
        elif self.kind == ACK:
            n += 8
        else:
            raise ValueError(f"unknown payload kind {self.kind!r}")
        return n


@dataclass(slots=True)
class VarBuffer:
    """Ordered delta log for one variable plus per-peer ack bookkeeping."""

    entries: list[tuple[int, Delta]] = field(default_factory=list)
    next_seq: int = 1
    acked: dict[ActorId, int] = field(default_factory=dict)
    compacted_upto: int = 0  # sequences <= this have been discarded

    def append(self, delta: Delta) -> int:
        seq = self.next_seq
        self.entries.append((seq, delta))
        self.next_seq = seq + 1
        return seq

    def compact(self, peers) -> None:
        if not peers or not self.entries:
            return
        floor = min(self.acked.get(p, 0) for p in peers)
        if floor <= self.compacted_upto:
            return
        self.entries = [(s, d) for s, d in self.entries if s > floor]
        self.compacted_upto = floor


@dataclass(slots=True)
class Disseminator:
    """Per-node dissemination state; one instance per simulated node."""

    owner: ActorId
    store: Store
    mode: str  # state | delta
    fallback_after: int = 3
    uninstrumented: frozenset[str] = frozenset()
    buffers: dict[str, VarBuffer] = field(default_factory=dict)
    recv_contig: dict[tuple[ActorId, str], int] = field(default_factory=dict)
    gap_intervals: dict[tuple[ActorId, str], int] = field(default_factory=dict)
    stalled: dict[tuple[ActorId, str], tuple[int, int]] = field(default_factory=dict)
    _state_sizes: dict[str, tuple[int, int]] = field(default_factory=dict)

    def _buffer(self, var_id: str) -> VarBuffer:
        buf = self.buffers.get(var_id)
        if buf is None:
            buf = VarBuffer()
            self.buffers[var_id] = buf
        return buf

    def _source_vars(self) -> list[str]:
        return sorted(
            v.id for v in self.store.variables.values() if v.kind == "source"
        )

    def local_delta(self, var_id: str, delta: Delta) -> None:
        """Record a local mutation's delta for later dissemination."""
        if self.mode == "delta":
            self._buffer(var_id).append(delta)

    def reset_protocol_state(self) -> None:
        """Drop volatile protocol state after a process replacement.

        Sequence counters survive so a replaced process never reissues a
        sequence number its peers may already have acknowledged.
        """
        for buf in self.buffers.values():
            buf.entries = []
            buf.compacted_upto = buf.next_seq - 1
            buf.acked = {}
        self.recv_contig = {}
        self.gap_intervals = {}
        self.stalled = {}

    # ------------------------------------------------------- propagation

    def propagation_tick(self, peers: list[ActorId]) -> list[Payload]:
        if self.mode == "state":
            return self.state_tick(peers)
        return self.delta_tick(peers)

    def _full_state_size(self, var_id: str) -> int:
        var = self.store.variables[var_id]
        cached = self._state_sizes.get(var_id)
        if cached is None or cached[0] != var.version:
            cached = (var.version, state_size(var.state))
            self._state_sizes[var_id] = cached
        return 1 + 4 + utf8_len(var_id) + cached[1]

    def state_tick(self, peers: list[ActorId]) -> list[Payload]:
        """Full state of every source variable to every peer (pre-sorted)."""
        out = []
        for var_id in self._source_vars():
            state = self.store.state(var_id)
            instrumented = var_id not in self.uninstrumented
            size = self._full_state_size(var_id)
            for peer in peers:
                out.append(
                    Payload(FULL_STATE, self.owner, peer, var_id, state,
                            instrumented=instrumented, size_hint=size)
                )
        return out

    def delta_tick(self, peers: list[ActorId]) -> list[Payload]:
        """One delta group per (pre-sorted) peer and variable above its ack."""
        out = []
        for var_id in self._source_vars():
            buf = self.buffers.get(var_id)
            if buf is None:
                continue
            instrumented = var_id not in self.uninstrumented
            group_cache: dict[int, tuple[int, Delta | None, int]] = {}
            for peer in peers:
                acked = buf.acked.get(peer, 0)
                key = (peer, var_id)
                if acked < buf.compacted_upto:
                    # The contiguous suffix this peer needs is gone.
                    misses = self.gap_intervals.get(key, 0) + 1
                    self.gap_intervals[key] = misses
                    if misses >= self.fallback_after:
                        out.append(self._fallback(peer, var_id, buf, instrumented))
                    continue
                self.gap_intervals.pop(key, None)
                if acked >= buf.next_seq - 1:
                    self.stalled.pop(key, None)
                    continue
                # Pending entries exist. A peer that receives groups but
                # never advances its ack (it lost its contiguity tracking)
                # would pin the buffer forever; fall back to full state.
                last_acked, stuck = self.stalled.get(key, (None, 0))
                stuck = stuck + 1 if last_acked == acked else 0
                self.stalled[key] = (acked, stuck)
                if stuck >= self.fallback_after:
                    out.append(self._fallback(peer, var_id, buf, instrumented))
                    continue
                cached = group_cache.get(acked)
                if cached is None:
                    pending = [(s, d) for s, d in buf.entries if s > acked]
                    if pending:
                        group = pending[0][1]
                        for _, d in pending[1:]:
                            group = join(group, d)
                        size = 1 + 4 + utf8_len(var_id) + 16 + state_size(group)
                        cached = (pending[-1][0], group, size)
                    else:
                        cached = (0, None, 0)
                    group_cache[acked] = cached
                seq_end, group, size = cached
                if group is not None:
                    out.append(
                        Payload(DELTA_GROUP, self.owner, peer, var_id, group,
                                seq_start=acked + 1, seq_end=seq_end,
                                instrumented=instrumented, size_hint=size)
                    )
        return out

    def _fallback(self, peer: ActorId, var_id: str, buf: VarBuffer,
                  instrumented: bool) -> Payload:
        return Payload(FULL_STATE, self.owner, peer, var_id,
                       self.store.state(var_id), upto_seq=buf.next_seq - 1,
                       instrumented=instrumented,
                       size_hint=self._full_state_size(var_id) + 8)

    # ---------------------------------------------------------- receiving

    def handle_payload(self, payload: Payload) -> Payload | None:
        """Merge an incoming payload; returns the ack to send, if any."""
        if payload.receiver != self.owner:
            raise ValueError("payload delivered to the wrong node")
        var_id = payload.var_id
        key = (payload.sender, var_id)
        if payload.kind == FULL_STATE:
            changed = self.store.join_into(var_id, payload.body)
            if changed and self.mode == "delta":
                self._buffer(var_id).append(payload.body)
            if payload.upto_seq is not None:
                contig = max(self.recv_contig.get(key, 0), payload.upto_seq)
                self.recv_contig[key] = contig
                return Payload(ACK, self.owner, payload.sender, var_id,
                               seq_end=contig,
                               instrumented=payload.instrumented)
            return None
        if payload.kind == DELTA_GROUP:
            changed = self.store.join_into(var_id, payload.body)
            if changed:
                self._buffer(var_id).append(payload.body)
            contig = self.recv_contig.get(key, 0)
            if payload.seq_start <= contig + 1:
                contig = max(contig, payload.seq_end)
                self.recv_contig[key] = contig
            return Payload(ACK, self.owner, payload.sender, var_id,
                           seq_end=contig,
                           instrumented=payload.instrumented)
        raise ValueError(f"cannot handle payload kind {payload.kind!r}")

    def handle_ack(self, payload: Payload, peers: list[ActorId]) -> bool:
        """Raise a peer's cumulative ack; returns False for unknown peers."""
        if payload.sender not in peers:
            return False
        buf = self.buffers.get(payload.var_id)
        if buf is None:
            return False
        old = buf.acked.get(payload.sender, 0)
        if payload.seq_end > old:
            buf.acked[payload.sender] = payload.seq_end
            buf.compact(peers)
        if buf.acked.get(payload.sender, 0) >= buf.compacted_upto:
            self.gap_intervals.pop((payload.sender, payload.var_id), None)
        return True

    def max_buffer_len(self) -> int:
        if not self.buffers:
            return 0
        return max(len(b.entries) for b in self.buffers.values())

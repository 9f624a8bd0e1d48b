"""Canonical byte encoding for lattice states and message envelopes.

Used for size accounting and deterministic ordering only; the simulator
passes values in memory. Layout: 1-byte variant tag, integers as 8-byte
big-endian, counts and lengths as 4-byte big-endian, identifiers as
length-prefixed UTF-8, set elements via their tagged canonical bytes,
mappings and sets as a count followed by sorted entries, pairs as the
two encoded components. Payload envelopes prepend a 1-byte payload tag.

``encoded_size`` mirrors ``encode_state`` arithmetically so the hot path
never materializes bytes; a property test pins the two routes together.
"""

from __future__ import annotations

import struct

from .lattice import (
    AWSet,
    CausalContext,
    Dot,
    GCounter,
    GMap,
    LatticeState,
    Pair,
    Workflow,
    element_bytes,
)

TAG_GCOUNTER = 1
TAG_AWSET = 2
TAG_GMAP = 3
TAG_PAIR = 4
TAG_WORKFLOW = 5

PAYLOAD_TAGS = {"full_state": 1, "delta_group": 2, "ack": 3, "membership_control": 4}

_utf8_len_cache: dict[str, int] = {}


def utf8_len(s: str) -> int:
    n = _utf8_len_cache.get(s)
    if n is None:
        n = len(s.encode("utf-8"))
        _utf8_len_cache[s] = n
    return n


def _ident(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def _dot_bytes(d: Dot) -> bytes:
    return _ident(d.actor) + struct.pack(">Q", d.seq)


def _dot_size(d: Dot) -> int:
    return 4 + utf8_len(d.actor) + 8


def _context_bytes(ctx: CausalContext) -> bytes:
    out = [struct.pack(">I", len(ctx.maxima))]
    for actor in sorted(ctx.maxima):
        out.append(_ident(actor) + struct.pack(">Q", ctx.maxima[actor]))
    out.append(struct.pack(">I", len(ctx.cloud)))
    for d in sorted(ctx.cloud):
        out.append(_dot_bytes(d))
    return b"".join(out)


def _context_size(ctx: CausalContext) -> int:
    n = 8  # two counts
    for actor in ctx.maxima:
        n += 4 + utf8_len(actor) + 8
    for d in ctx.cloud:
        n += _dot_size(d)
    return n


def encode_state(s: LatticeState) -> bytes:
    t = type(s)
    if t is GCounter:
        out = [bytes([TAG_GCOUNTER]), struct.pack(">I", len(s.entries))]
        for actor in sorted(s.entries):
            out.append(_ident(actor) + struct.pack(">Q", s.entries[actor]))
        return b"".join(out)
    if t is AWSet:
        out = [bytes([TAG_AWSET]), struct.pack(">I", len(s.dots))]
        for e in sorted(s.dots, key=element_bytes):
            dots = s.dots[e]
            out.append(element_bytes(e) + struct.pack(">I", len(dots)))
            for d in sorted(dots):
                out.append(_dot_bytes(d))
        out.append(_context_bytes(s.context))
        return b"".join(out)
    if t is GMap:
        out = [bytes([TAG_GMAP]), struct.pack(">I", len(s.entries))]
        for k in sorted(s.entries):
            out.append(_ident(k) + (b"\x01" if s.entries[k] else b"\x00"))
        return b"".join(out)
    if t is Pair:
        return bytes([TAG_PAIR]) + encode_state(s.first) + encode_state(s.second)
    if t is Workflow:
        out = [bytes([TAG_WORKFLOW]), struct.pack(">I", len(s.tasks))]
        for task in s.tasks:
            out.append(encode_state(task))
        return b"".join(out)
    raise TypeError(f"not a lattice state: {t.__name__}")


def state_size(s: LatticeState) -> int:
    t = type(s)
    if t is GCounter:
        n = 5
        for actor in s.entries:
            n += 12 + utf8_len(actor)
        return n
    if t is AWSet:
        n = 5
        for e, dots in s.dots.items():
            n += len(element_bytes(e)) + 4
            for d in dots:
                n += _dot_size(d)
        return n + _context_size(s.context)
    if t is GMap:
        n = 5
        for k in s.entries:
            n += 4 + utf8_len(k) + 1
        return n
    if t is Pair:
        return 1 + state_size(s.first) + state_size(s.second)
    if t is Workflow:
        return 5 + sum(state_size(task) for task in s.tasks)
    raise TypeError(f"not a lattice state: {t.__name__}")


def encoded_size(x) -> int:
    """Byte length of the canonical encoding of a state or payload."""
    if isinstance(x, (GCounter, AWSet, GMap, Pair, Workflow)):
        return state_size(x)
    size = getattr(x, "wire_size", None)
    if size is None:
        raise TypeError(f"cannot size {type(x).__name__}")
    return size()

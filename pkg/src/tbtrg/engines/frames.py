"""Wire frames for keyed pairs exchanged between the driver and reducers.

Layout: version byte, varint body length, then the body: partition key
bytes, state bytes, tag byte, optional node id, and the incoming edges
(source id, transition, binding, optional candidate state).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..model.state import SymbolicState, decode_state
from ..partition import decode_key, feature
from ..store import Edge, NodeId
from ..wire import DecodeError, Reader, put_bytes, put_str, put_varint

FRAME_VERSION = 1
NEW = "new"
OLD = "old"
_TAGS = {NEW: 0, OLD: 1}
_TAG_NAMES = {v: k for k, v in _TAGS.items()}


@dataclass(frozen=True)
class NodePayload:
    id: Optional[NodeId]
    state: SymbolicState
    incoming: tuple = ()
    outgoing: tuple = ()  # labels of emitted edges, once expanded


@dataclass(frozen=True)
class KeyedPair:
    key: object  # PartitionKey
    value: NodePayload
    tag: str = NEW


def _put_id(out: bytearray, nid: Optional[NodeId]) -> None:
    if nid is None:
        out.append(0)
    else:
        out.append(1)
        put_varint(out, nid.partition)
        put_varint(out, nid.serial)


def _get_id(r: Reader) -> Optional[NodeId]:
    pos = r.pos
    flag = r.byte()
    if flag == 0:
        return None
    if flag != 1:
        raise DecodeError(pos, f"bad node-id flag {flag}")
    return NodeId(r.varint(), r.varint())


def serialize_pair(pair: KeyedPair) -> bytes:
    body = bytearray()
    put_bytes(body, pair.key.encoded)
    put_bytes(body, pair.value.state.encode())
    body.append(_TAGS[pair.tag])
    _put_id(body, pair.value.id)
    put_varint(body, len(pair.value.incoming))
    for e in pair.value.incoming:
        _put_id(body, e.source)
        put_str(body, e.label[0])
        put_str(body, e.label[1])
        if e.candidate is None:
            body.append(0)
        else:
            body.append(1)
            put_bytes(body, e.candidate.encode())
    put_varint(body, len(pair.value.outgoing))
    for label in pair.value.outgoing:
        put_str(body, label[0])
        put_str(body, label[1])
    out = bytearray([FRAME_VERSION])
    put_varint(out, len(body))
    return bytes(out + body)


def _state(r: Reader) -> SymbolicState:
    start = r.pos
    length = r.varint()
    r._need(length)
    end = r.pos + length
    sub = Reader(r.data, r.pos, end)
    try:
        s = decode_state(r.data, sub)
        sub.expect_end()
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, DecodeError):
            raise  # malformed content that parsed structurally
        raise DecodeError(start, f"bad state payload: {exc}") from None
    r.pos = end
    return s


def deserialize_pair(data: bytes, reader: Optional[Reader] = None) -> KeyedPair:
    """Decode one frame; raises :class:`DecodeError` with the failing offset."""
    r = reader or Reader(data)
    start = r.pos
    version = r.byte()
    if version != FRAME_VERSION:
        raise DecodeError(start, f"unsupported frame version {version}")
    length = r.varint()
    body_start = r.pos
    r._need(length)
    body = Reader(r.data, body_start, body_start + length)
    key_pos = body.pos
    key_bytes = body.bytes_()
    try:
        key = decode_key(key_bytes)
    except DecodeError as exc:
        raise DecodeError(key_pos + exc.offset, str(exc)) from None
    state_pos = body.pos
    state = _state(body)
    if feature(state, key.policy) != key:
        raise DecodeError(state_pos, "state does not match its partition key")
    tag_pos = body.pos
    tag = _TAG_NAMES.get(body.byte())
    if tag is None:
        raise DecodeError(tag_pos, "bad tag byte")
    nid = _get_id(body)
    edges = []
    for _ in range(body.varint()):
        src = _get_id(body)
        label = (body.str_(), body.str_())
        flag_pos = body.pos
        flag = body.byte()
        if flag not in (0, 1):
            raise DecodeError(flag_pos, f"bad candidate flag {flag}")
        cand = _state(body) if flag else None
        edges.append(Edge(src, label, cand))
    outgoing = tuple((body.str_(), body.str_()) for _ in range(body.varint()))
    body.expect_end()
    r.pos = body.end
    if reader is None:
        r.expect_end()
    return KeyedPair(key, NodePayload(nid, state, tuple(edges), outgoing), tag)


def serialize_batch(pairs) -> bytes:
    out = bytearray()
    for p in pairs:
        out += serialize_pair(p)
    return bytes(out)


def deserialize_batch(data: bytes) -> list:
    r = Reader(data)
    out = []
    while not r.done():
        out.append(deserialize_pair(data, r))
    return out

"""State features f(S) and the partition function hash(f(S)) mod n."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .model.state import SymbolicState
from .wire import put_varint

SOFT = "soft"
DISCRIMINANT = "discriminant"
POLICIES = (SOFT, DISCRIMINANT)
_POLICY_BYTE = {SOFT: 0, DISCRIMINANT: 1}

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK
    return h


def soft_marking(s: SymbolicState) -> tuple:
    """Per-place token counts; anonymity is invisible."""
    return tuple(len(pt.named) + pt.anon for pt in s.marking)


def discriminant_soft_marking(s: SymbolicState) -> tuple:
    """Per-place ``(named, anonymous)`` token counts."""
    return tuple((len(pt.named), pt.anon) for pt in s.marking)


@dataclass(frozen=True)
class PartitionKey:
    policy: str
    vector: tuple

    @cached_property
    def encoded(self) -> bytes:
        """Policy byte, ``k`` as varint, then the counts in place order."""
        out = bytearray([_POLICY_BYTE[self.policy]])
        put_varint(out, len(self.vector))
        for item in self.vector:
            if self.policy == DISCRIMINANT:
                put_varint(out, item[0])
                put_varint(out, item[1])
            else:
                put_varint(out, item)
        return bytes(out)

    def __lt__(self, other: "PartitionKey") -> bool:
        return self.encoded < other.encoded

    def __getstate__(self):
        return {"policy": self.policy, "vector": self.vector}

    def __setstate__(self, st):
        object.__setattr__(self, "policy", st["policy"])
        object.__setattr__(self, "vector", st["vector"])


def decode_key(data: bytes) -> PartitionKey:
    from .wire import DecodeError, Reader

    r = Reader(data)
    tag = r.byte()
    policy = {v: k for k, v in _POLICY_BYTE.items()}.get(tag)
    if policy is None:
        raise DecodeError(0, f"unknown policy byte {tag}")
    k = r.varint()
    if policy == DISCRIMINANT:
        vec = tuple((r.varint(), r.varint()) for _ in range(k))
    else:
        vec = tuple(r.varint() for _ in range(k))
    r.expect_end()
    return PartitionKey(policy, vec)


def feature(s: SymbolicState, policy: str) -> PartitionKey:
    memo = s._memo
    slot = ("key", policy)
    if slot not in memo:
        if policy == SOFT:
            memo[slot] = PartitionKey(SOFT, soft_marking(s))
        elif policy == DISCRIMINANT:
            memo[slot] = PartitionKey(DISCRIMINANT, discriminant_soft_marking(s))
        else:
            raise ValueError(f"unknown partition policy {policy!r}")
    return memo[slot]


def assign(key: PartitionKey, n: int) -> int:
    if n < 1:
        raise ValueError("partition count must be positive")
    return fnv1a64(key.encoded) % n


def partition_of(s: SymbolicState, policy: str, n: int) -> int:
    return assign(feature(s, policy), n)

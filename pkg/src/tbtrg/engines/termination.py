"""Counting-wave termination detection for asynchronous peers.

Each wave collects, from every peer, its cumulative sent/received message
counts and whether it is idle.  Quiescence is declared after two consecutive
waves that report the same totals, with sent equal to received and every peer
idle in both.  Counts only grow, so equal totals across two waves mean no
message was in flight between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class ProbeReply:
    peer: int
    wave: int
    sent: int
    received: int
    idle: bool
    pending: int = 0


class TerminationDetector:
    def __init__(self, peers: int, external_sent: int = 0):
        self.peers = peers
        self.external_sent = external_sent  # messages injected by the coordinator
        self.waves = 0
        self._last: Optional[tuple] = None

    def observe(self, replies: list) -> bool:
        """Feed one complete wave; returns True once quiescence is certain."""
        if len({r.peer for r in replies}) != self.peers:
            raise ValueError("a wave needs exactly one reply per peer")
        self.waves += 1
        sent = self.external_sent + sum(r.sent for r in replies)
        received = sum(r.received for r in replies)
        idle = all(r.idle for r in replies)
        snapshot = (sent, received, idle)
        done = idle and sent == received and self._last == snapshot
        self._last = snapshot
        return done

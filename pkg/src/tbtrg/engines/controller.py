"""Front-size controller for switching between sequential and cluster mode."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..partition import DISCRIMINANT, POLICIES

SEQ = "seq"
CLUSTER = "cluster"
UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class HybridConfig:
    T: int = 200
    H: int = 50
    policy: str = DISCRIMINANT
    n: int = 2
    backend: str = "inline"  # or "process"
    combine: bool = False

    def __post_init__(self):
        if not 0 < self.H < self.T:
            raise ValueError(f"need 0 < H < T, got T={self.T}, H={self.H}")
        if self.n < 1:
            raise ValueError("cluster size must be positive")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")


class HybridController:
    """Up when the front reaches ``T``; down only once it falls to ``T - H``."""

    def __init__(self, T: int, H: int):
        if not 0 < H < T:
            raise ValueError(f"need 0 < H < T, got T={T}, H={H}")
        self.T = T
        self.H = H
        self.mode = SEQ
        self.log: list = []  # (step, front, direction)

    def observe(self, front: int, step: Optional[int] = None) -> Optional[str]:
        step = len(self.log) if step is None else step
        if self.mode == SEQ and front >= self.T:
            self.mode = CLUSTER
            self.log.append((step, front, UP))
            return UP
        if self.mode == CLUSTER and front <= self.T - self.H:
            self.mode = SEQ
            self.log.append((step, front, DOWN))
            return DOWN
        return None


def replay(trace, T: int, H: int) -> list:
    """Switch log for a synthetic front trace; steps are trace indices."""
    ctl = HybridController(T, H)
    for i, front in enumerate(trace):
        ctl.observe(front, i)
    return ctl.log

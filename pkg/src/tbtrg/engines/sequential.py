"""Single-threaded Map+Fold loop over a FIFO remaining list."""

from __future__ import annotations

import random
import time
from typing import Optional

from ..model.firing import successors
from ..model.net import Net
from ..model.state import SymbolicState
from ..partition import DISCRIMINANT
from ..report import CAPPED, OK, Caps, RunReport
from ..store import INITIAL_LABEL, Trg, TrgStore


def expand(store: TrgStore, net: Net, node) -> int:
    """Map one node and fold every successor; returns the successor count."""
    succ = successors(node.state, net)
    node.outgoing = [(b.transition, b.label) for b, _ in succ]
    for b, state in succ:
        store.fold(state, node.id, (b.transition, b.label))
    return len(succ)


def _pop(part, rng: Optional[random.Random]):
    if rng is None or len(part.remaining) < 2:
        return part.pop_pending()
    nid = rng.choice(list(part.remaining))
    return part.take(nid)


def build_sequential(
    net: Net,
    initial: SymbolicState,
    policy: str = DISCRIMINANT,
    caps: Optional[Caps] = None,
    order_seed: Optional[int] = None,
) -> tuple:
    """Build the TRG with one partition; returns ``(trg, report)``.

    ``order_seed`` replaces FIFO with a seeded random pick from the
    remaining list (used to check that the result does not depend on order).
    """
    caps = caps or Caps()
    rng = random.Random(order_seed) if order_seed is not None else None
    store = TrgStore(1, policy)
    part = store.partitions[0]
    t0 = time.perf_counter()
    store.fold(initial, None, INITIAL_LABEL)
    front = []
    status, reason = OK, ""
    step = 0
    while True:
        front.append((step, part.pending_count(), "seq"))
        node = _pop(part, rng)
        if node is None:
            break
        expand(store, net, node)
        step += 1
        why = caps.hit(len(part.by_digest), part.generated, time.perf_counter() - t0)
        if why:
            status, reason = CAPPED, why
            front.append((step, part.pending_count(), "seq"))
            break
    trg = store.finalize(partial=status != OK)
    report = make_report("seq", {"n": 1, "policy": policy}, store, trg, time.perf_counter() - t0, front)
    report.status, report.reason = status, reason
    return trg, report


def make_report(engine: str, config: dict, store: TrgStore, trg: Trg, wall: float, front: list) -> RunReport:
    st = store.stats()
    return RunReport(
        engine=engine,
        config=config,
        nodes=len(trg.nodes),
        edges=len(trg.edges),
        generated=st["generated"],
        merged=st["merged"],
        absorbed=st["absorbed"],
        wall_time=wall,
        histogram=trg.histogram,
        front=front,
        extra={"inclusion_checks": st["inclusion_checks"], "removed_edges": trg.removed_edges,
               "pending_at_end": trg.pending},
    )

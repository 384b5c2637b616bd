"""Hybrid iterative map-fold.

The dataset is a collection of keyed pairs ``(key, node)`` tagged new or
old.  One iteration maps every pair (old ones pass through, new ones are
expanded), groups the output by key, sends each group to reducer
``assign(key, n)`` and resolves inclusions inside the group.  Iterations
repeat until no new pair is left.

:func:`run_iteration` is the plain reference version that carries the whole
dataset.  :func:`build_hybrid` keeps each reducer's old nodes resident in
its :class:`~tbtrg.store.Partition` instead of reshuffling them, and falls
back to the sequential loop while the front is small.
"""

from __future__ import annotations

import multiprocessing as mp
import time
import traceback
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from ..model.firing import successors
from ..model.net import Net
from ..model.state import SymbolicState, includes
from ..partition import assign, feature
from ..report import CAPPED, OK, Caps, RunReport
from ..store import (
    EXPANDED, INITIAL_LABEL, PENDING, Edge, NodeId, Partition, RoutingError, TrgNode, TrgStore,
    finalize, store_stats,
)
from .controller import CLUSTER, DOWN, SEQ, UP, HybridConfig, HybridController
from .frames import NEW, OLD, KeyedPair, NodePayload, deserialize_batch, serialize_batch


class ClusterError(RuntimeError):
    pass


def pair_of(node: TrgNode, tag: Optional[str] = None) -> KeyedPair:
    if tag is None:
        tag = NEW if node.status == PENDING else OLD
    return KeyedPair(node.key, NodePayload(node.id, node.state, tuple(node.incoming), tuple(node.outgoing)), tag)


def seed_pair(state: SymbolicState, policy: str) -> KeyedPair:
    return KeyedPair(feature(state, policy), NodePayload(None, state, (Edge(None, INITIAL_LABEL),)), NEW)


def map_step(pair: KeyedPair, net: Net) -> list:
    """Old pairs pass through; a new pair becomes old and emits its successors."""
    if pair.tag == OLD:
        return [pair]
    policy = pair.key.policy
    succ = successors(pair.value.state, net)
    labels = tuple((b.transition, b.label) for b, _ in succ)
    out = [replace(pair, tag=OLD, value=replace(pair.value, outgoing=labels))]
    for label, (_, s) in zip(labels, succ):
        edge = Edge(pair.value.id, label)
        out.append(KeyedPair(feature(s, policy), NodePayload(None, s, (edge,)), NEW))
    return out


def combine_siblings(pairs: list) -> list:
    """Optional combine: fold same-key successors of one parent together.

    A successor included in a sibling is dropped and its edge moves to the
    sibling; the edge keeps the dropped state so the final target resolution
    is unaffected.
    """
    kept: list = []
    for p in pairs:
        for i, q in enumerate(kept):
            if q.key == p.key and includes(p.value.state, q.value.state):
                moved = tuple(Edge(e.source, e.label, e.candidate or p.value.state) for e in p.value.incoming)
                kept[i] = replace(q, value=replace(q.value, incoming=q.value.incoming + moved))
                break
        else:
            kept.append(p)
    return kept


def _order(pair: KeyedPair):
    first = pair.value.incoming[0] if pair.value.incoming else None
    src = first.source if first and first.source is not None else NodeId(-1, -1)
    return (pair.value.state.digest, src, first.label if first else ("", ""))


def fold_pair(part: Partition, pair: KeyedPair):
    """Fold one fresh pair (no node id yet) into ``part``."""
    edges = pair.value.incoming or (Edge(None, INITIAL_LABEL),)
    state = pair.value.state
    first = edges[0]
    outcome = part.fold_insert(state, first.source, first.label)
    if first.candidate is not None:
        holder = part.nodes[outcome.node]
        holder.incoming[-1] = Edge(first.source, first.label, first.candidate)
    holder = part.nodes[outcome.node]
    for e in edges[1:]:
        cand = e.candidate or state
        holder.incoming.append(Edge(e.source, e.label, None if cand.digest == holder.state.digest else cand))
    return outcome


def reduce_into(part: Partition, pairs: list) -> list:
    """Fold fresh pairs into a resident partition, key group by key group.

    Returns ``[(group_size, inclusion_checks), ...]`` per group, where the
    group size counts resident nodes with the key plus the arriving pairs.
    """
    groups: dict = {}
    for p in pairs:
        groups.setdefault(p.key, []).append(p)
    costs = []
    for key in sorted(groups):
        vals = sorted(groups[key], key=_order)
        g = len(part.buckets.get(key, ())) + len(vals)
        before = part.inclusion_checks
        for p in vals:
            fold_pair(part, p)
        costs.append((g, part.inclusion_checks - before))
    return costs


@dataclass
class ReduceResult:
    values: list
    removals: list
    next_serial: int
    checks: int


def reduce_step(key, values: list, n: int, serial_start: int = 0, index: Optional[int] = None) -> ReduceResult:
    """Resolve inclusions inside one key group (reference, non-resident)."""
    index = assign(key, n) if index is None else index
    for v in values:
        if v.key != key or feature(v.value.state, key.policy) != key:
            raise RoutingError(f"value with key {feature(v.value.state, key.policy).vector} in group {key.vector}")
    part = Partition(index, n, key.policy)
    part.next_serial = serial_start
    known = sorted((v for v in values if v.value.id is not None), key=lambda v: v.value.id)
    for v in known:
        status = PENDING if v.tag == NEW else EXPANDED
        part.adopt(TrgNode(v.value.id, v.value.state, key, list(v.value.incoming), status,
                           outgoing=list(v.value.outgoing)))
    fresh = sorted((v for v in values if v.value.id is None), key=_order)
    for v in fresh:
        fold_pair(part, v)
    out = [pair_of(node) for node in sorted(part.live_nodes(), key=lambda nd: nd.id)]
    return ReduceResult(out, list(part.removals), part.next_serial, part.inclusion_checks)


@dataclass
class IterationInput:
    new: list
    old: list
    serials: dict = field(default_factory=dict)
    removals: list = field(default_factory=list)

    @property
    def front_size(self) -> int:
        return len(self.new)


def run_iteration(inp: IterationInput, net: Net, n: int, combine: bool = False) -> IterationInput:
    """One map / shuffle / reduce round over the full dataset."""
    if not inp.new:
        return inp
    mapped = []
    for pair in inp.old + inp.new:
        out = map_step(pair, net)
        mapped.append(out[0])
        mapped.extend(combine_siblings(out[1:]) if combine else out[1:])
    groups: dict = {}
    for p in mapped:
        groups.setdefault(p.key, []).append(p)
    serials = dict(inp.serials)
    removals = list(inp.removals)
    new, old = [], []
    for key in sorted(groups, key=lambda k: (assign(k, n), k)):
        r = assign(key, n)
        res = reduce_step(key, groups[key], n, serials.get(r, 0), r)
        serials[r] = res.next_serial
        removals.extend(res.removals)
        for v in res.values:
            (new if v.tag == NEW else old).append(v)
    return IterationInput(new, old, serials, removals)


def initial_input(initial: SymbolicState, policy: str, n: int) -> IterationInput:
    """Dataset holding only the reduced seed node."""
    seed = seed_pair(initial, policy)
    r = assign(seed.key, n)
    res = reduce_step(seed.key, [seed], n, 0, r)
    return IterationInput(res.values, [], {r: res.next_serial}, res.removals)


def partitions_of(inp: IterationInput, n: int, policy: str) -> list:
    """Materialize a dataset as store partitions (for finalize)."""
    parts = [Partition(i, n, policy) for i in range(n)]
    for v in inp.old + inp.new:
        status = PENDING if v.tag == NEW else EXPANDED
        parts[v.value.id.partition].adopt(TrgNode(v.value.id, v.value.state, v.key, list(v.value.incoming), status,
                                                  outgoing=list(v.value.outgoing)))
    parts[0].removals.extend(inp.removals)
    return parts


def iterate_to_fixpoint(net: Net, initial: SymbolicState, n: int, policy: str, combine: bool = False,
                        max_iterations: int = 10**6) -> tuple:
    """Reference run of :func:`run_iteration`; returns ``(trg, fronts)``."""
    inp = initial_input(initial, policy, n)
    fronts = [inp.front_size]
    while inp.new and len(fronts) <= max_iterations:
        inp = run_iteration(inp, net, n, combine)
        fronts.append(inp.front_size)
    return finalize(partitions_of(inp, n, policy), partial=bool(inp.new)), fronts


# --- cluster backends ------------------------------------------------------


def _map_partition(part: Partition, net: Net, n: int, combine: bool) -> list:
    """Expand every pending node of ``part``; returns per-reducer pair lists."""
    out = [[] for _ in range(n)]
    for nid in list(part.remaining):
        node = part.take(nid)
        mapped = map_step(pair_of(node, NEW), net)
        node.outgoing = list(mapped[0].value.outgoing)
        pairs = mapped[1:]
        if combine:
            pairs = combine_siblings(pairs)
        for p in pairs:
            out[assign(p.key, n)].append(p)
    return out


class InlineCluster:
    """Reducers as in-process partitions; map and reduce run one after another."""

    def __init__(self, net: Net, n: int, combine: bool):
        self.net, self.n, self.combine = net, n, combine
        self.parts: list = []

    def load(self, parts: list) -> None:
        self.parts = parts

    def iterate(self) -> tuple:
        outgoing = [[] for _ in range(self.n)]
        for part in self.parts:
            for dest, pairs in enumerate(_map_partition(part, self.net, self.n, self.combine)):
                outgoing[dest].extend(pairs)
        costs = []
        for part, pairs in zip(self.parts, outgoing):
            costs.extend(reduce_into(part, pairs))
        return sum(p.pending_count() for p in self.parts), costs

    def unload(self) -> list:
        parts, self.parts = self.parts, []
        return parts

    def close(self) -> None:
        pass


def _reducer_main(conn, net: Net, n: int, combine: bool) -> None:
    part = None
    try:
        while True:
            cmd, *args = conn.recv()
            if cmd == "load":
                part = args[0]
                conn.send(("ok",))
            elif cmd == "map":
                out = _map_partition(part, net, n, combine)
                conn.send(("frames", [serialize_batch(pairs) for pairs in out]))
            elif cmd == "reduce":
                pairs = []
                for blob in args[0]:
                    pairs.extend(deserialize_batch(blob))
                costs = reduce_into(part, pairs)
                conn.send(("reduced", part.pending_count(), costs))
            elif cmd == "unload":
                conn.send(("part", part))
                part = None
            elif cmd == "exit":
                conn.send(("bye",))
                return
    except BaseException:
        try:
            conn.send(("error", traceback.format_exc()))
        except Exception:
            pass


class ProcessCluster:
    """One reducer process per partition, fed serialized frames over pipes."""

    def __init__(self, net: Net, n: int, combine: bool):
        self.net, self.n, self.combine = net, n, combine
        self.procs, self.conns = [], []

    def _start(self) -> None:
        ctx = mp.get_context("fork")
        for _ in range(self.n):
            a, b = ctx.Pipe()
            p = ctx.Process(target=_reducer_main, args=(b, self.net, self.n, self.combine), daemon=True)
            p.start()
            self.procs.append(p)
            self.conns.append(a)

    def _ask_all(self, msgs: list) -> list:
        for c, m in zip(self.conns, msgs):
            c.send(m)
        out = []
        for i, c in enumerate(self.conns):
            if not c.poll(600):
                raise ClusterError(f"reducer {i} did not answer")
            reply = c.recv()
            if reply[0] == "error":
                raise ClusterError(f"reducer {i} failed:\n{reply[1]}")
            out.append(reply)
        return out

    def load(self, parts: list) -> None:
        if not self.procs:
            self._start()
        self._ask_all([("load", p) for p in parts])

    def iterate(self) -> tuple:
        mapped = self._ask_all([("map",)] * self.n)
        inboxes = [[reply[1][dest] for reply in mapped] for dest in range(self.n)]
        reduced = self._ask_all([("reduce", blobs) for blobs in inboxes])
        costs = [c for r in reduced for c in r[2]]
        return sum(r[1] for r in reduced), costs

    def unload(self) -> list:
        return [r[1] for r in self._ask_all([("unload",)] * self.n)]

    def close(self) -> None:
        for c in self.conns:
            try:
                c.send(("exit",))
            except Exception:
                pass
        for p in self.procs:
            p.join(timeout=5)
            if p.is_alive():
                p.terminate()
        self.procs, self.conns = [], []


def build_hybrid(net: Net, initial: SymbolicState, cfg: Optional[HybridConfig] = None,
                 caps: Optional[Caps] = None) -> tuple:
    """Sequential below ``T``, iterative cluster mode above; returns ``(trg, report)``."""
    cfg = cfg or HybridConfig()
    caps = caps or Caps()
    store = TrgStore(cfg.n, cfg.policy)
    ctl = HybridController(cfg.T, cfg.H)
    cluster = (ProcessCluster if cfg.backend == "process" else InlineCluster)(net, cfg.n, cfg.combine)
    t0 = time.perf_counter()
    fifo: deque = deque([store.fold(initial, None, INITIAL_LABEL).node])
    front, costs = [], []
    status, reason = OK, ""
    step = iterations = 0
    size = 1
    try:
        while True:
            front.append((step, size, ctl.mode))
            if size == 0:
                break
            move = ctl.observe(size, step)
            if move == UP:
                cluster.load(store.partitions)
            elif move == DOWN:
                store.partitions = cluster.unload()
                fifo = deque(sorted(nid for p in store.partitions for nid in p.remaining))
            if ctl.mode == SEQ:
                node = None
                while node is None:
                    nid = fifo.popleft()
                    node = store.partitions[nid.partition].take(nid)
                succ_list = successors(node.state, net)
                node.outgoing = [(b.transition, b.label) for b, _ in succ_list]
                for b, succ in succ_list:
                    out = store.fold(succ, node.id, (b.transition, b.label))
                    if out.kind != "merged":
                        fifo.append(out.node)
                size = store.pending_count()
                live = sum(len(p.by_digest) for p in store.partitions)
                generated = sum(p.generated for p in store.partitions)
            else:
                size, group_costs = cluster.iterate()
                costs.extend(group_costs)
                iterations += 1
                live = generated = 0
                if caps.max_generated is not None or caps.max_nodes < 10**6:
                    parts = cluster.unload()
                    cluster.load(parts)
                    live = sum(len(p.by_digest) for p in parts)
                    generated = sum(p.generated for p in parts)
            step += 1
            why = caps.hit(live, generated, time.perf_counter() - t0)
            if why:
                status, reason = CAPPED, why
                front.append((step, size, ctl.mode))
                break
        if ctl.mode == CLUSTER:
            store.partitions = cluster.unload()
    finally:
        cluster.close()
    trg = finalize(store.partitions, partial=status != OK)
    st = store_stats(store.partitions)
    report = RunReport(
        engine="himapred",
        config={"n": cfg.n, "policy": cfg.policy, "T": cfg.T, "H": cfg.H, "backend": cfg.backend,
                "combine": cfg.combine},
        nodes=len(trg.nodes), edges=len(trg.edges), generated=st["generated"], merged=st["merged"],
        absorbed=st["absorbed"], wall_time=time.perf_counter() - t0, status=status, reason=reason,
        switches=list(ctl.log), histogram=trg.histogram, front=front,
        extra={
            "iterations": iterations,
            "reduce_groups": len(costs),
            "reduce_cost_ok": all(checks <= 2 * g * g for g, checks in costs),
            "max_group": max((g for g, _ in costs), default=0),
            "inclusion_checks": st["inclusion_checks"],
            "removed_edges": trg.removed_edges,
            "pending_at_end": trg.pending,
        },
    )
    return trg, report

"""Partitioned TRG storage: the Fold, absorption and delayed edge removal.

Edges are stored on their *target* node.  When a node is absorbed, its
incoming edges move to the absorber at once (they are local), while its
outgoing edges, which live in other partitions, are only logged as pending
and dropped by :func:`finalize` once the global fixpoint is reached.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .model.state import SymbolicState, includes
from .partition import DISCRIMINANT, PartitionKey, assign, feature

PENDING = "pending"
EXPANDED = "expanded"
ABSORBED = "absorbed"

INITIAL_LABEL = ("", "initial")


class RoutingError(RuntimeError):
    """A candidate reached a partition that does not own its key."""


class IntegrityError(RuntimeError):
    """The merged graph references a node that does not exist."""


class NodeId(NamedTuple):
    partition: int
    serial: int

    def __str__(self) -> str:
        return f"{self.partition}:{self.serial}"


@dataclass(frozen=True)
class Edge:
    source: Optional[NodeId]  # None: the pseudo-edge marking the initial state
    label: tuple  # (transition name, binding label)
    candidate: Optional[SymbolicState] = None  # successor as generated, if it differs from the holder


@dataclass
class TrgNode:
    id: NodeId
    state: SymbolicState
    key: PartitionKey
    incoming: list = field(default_factory=list)
    status: str = PENDING
    forward: Optional[NodeId] = None
    outgoing: list = field(default_factory=list)  # labels of edges this node emitted


@dataclass(frozen=True)
class PendingRemoval:
    """One outgoing edge of an absorbed node, to be deleted at finalize."""

    removed: NodeId
    absorbed_by: NodeId
    label: tuple


class FoldOutcome(NamedTuple):
    kind: str  # "new" | "merged" | "absorbs"
    node: NodeId
    absorbed: tuple = ()


class Partition:
    """One unit's share of the graph; mutated only by its owner."""

    def __init__(self, index: int, n: int, policy: str):
        self.index = index
        self.n = n
        self.policy = policy
        self.nodes: dict = {}
        self.buckets: dict = {}
        self.by_digest: dict = {}
        self.remaining: OrderedDict = OrderedDict()
        self.removals: list = []
        self.generated = 0
        self.merged = 0
        self.absorbed = 0
        self.inclusion_checks = 0
        self.next_serial = 0

    def key_of(self, state: SymbolicState) -> PartitionKey:
        return feature(state, self.policy)

    def owns(self, key: PartitionKey) -> bool:
        return assign(key, self.n) == self.index

    def live_nodes(self) -> Iterable[TrgNode]:
        return (node for node in self.nodes.values() if node.status != ABSORBED)

    def fold_insert(self, candidate: SymbolicState, source: Optional[NodeId], label: tuple) -> FoldOutcome:
        """Insert a mapped state, resolving inclusion against its key group."""
        key = self.key_of(candidate)
        if not self.owns(key):
            raise RoutingError(f"state with key {key.vector} routed to partition {self.index} of {self.n}")
        self.generated += 1
        hit = self.by_digest.get(candidate.digest)
        if hit is not None:
            self.nodes[hit].incoming.append(Edge(source, label))
            self.merged += 1
            return FoldOutcome("merged", hit)
        bucket = self.buckets.setdefault(key, [])
        for nid in sorted(bucket):
            self.inclusion_checks += 1
            if includes(candidate, self.nodes[nid].state):
                self.nodes[nid].incoming.append(Edge(source, label, candidate))
                self.merged += 1
                return FoldOutcome("merged", nid)
        subsets = []
        for nid in sorted(bucket):
            self.inclusion_checks += 1
            if includes(self.nodes[nid].state, candidate):
                subsets.append(nid)
        nid = NodeId(self.index, self.next_serial)
        self.next_serial += 1
        node = TrgNode(nid, candidate, key, [Edge(source, label)])
        for old_id in subsets:
            old = self.nodes[old_id]
            for e in old.incoming:
                node.incoming.append(Edge(e.source, e.label, e.candidate or old.state))
            old.incoming = []
            old.status = ABSORBED
            old.forward = nid
            bucket.remove(old_id)
            del self.by_digest[old.state.digest]
            self.remaining.pop(old_id, None)
            for label in old.outgoing:
                self.removals.append(PendingRemoval(old_id, nid, label))
            self.absorbed += 1
        self.nodes[nid] = node
        bucket.append(nid)
        self.by_digest[candidate.digest] = nid
        self.remaining[nid] = None
        if subsets:
            return FoldOutcome("absorbs", nid, tuple(subsets))
        return FoldOutcome("new", nid)

    def pop_pending(self) -> Optional[TrgNode]:
        """Next node of the local remaining list (FIFO), marked expanded."""
        if not self.remaining:
            return None
        nid, _ = self.remaining.popitem(last=False)
        node = self.nodes[nid]
        node.status = EXPANDED
        return node

    def take(self, nid: NodeId) -> Optional[TrgNode]:
        """Mark a specific pending node expanded; ``None`` if no longer pending."""
        node = self.nodes.get(nid)
        if node is None or node.status != PENDING:
            return None
        self.remaining.pop(nid, None)
        node.status = EXPANDED
        return node

    def adopt(self, node: TrgNode) -> None:
        """Install an existing node (handoff and scratch reducers)."""
        if not self.owns(node.key):
            raise RoutingError(f"node {node.id} does not belong to partition {self.index}")
        self.nodes[node.id] = node
        if node.status != ABSORBED:
            self.buckets.setdefault(node.key, []).append(node.id)
            self.by_digest[node.state.digest] = node.id
            if node.status == PENDING:
                self.remaining[node.id] = None
        self.next_serial = max(self.next_serial, node.id.serial + 1)

    def live_count(self) -> int:
        return sum(1 for _ in self.live_nodes())

    def pending_count(self) -> int:
        return len(self.remaining)


class TrgStore:
    """All partitions of one run, plus routing."""

    def __init__(self, n: int = 1, policy: str = DISCRIMINANT, partitions: Optional[list] = None):
        if n < 1:
            raise ValueError("partition count must be positive")
        self.n = n
        self.policy = policy
        self.partitions = partitions if partitions is not None else [Partition(i, n, policy) for i in range(n)]

    def route(self, state: SymbolicState) -> int:
        return assign(feature(state, self.policy), self.n)

    def fold(self, candidate: SymbolicState, source: Optional[NodeId], label: tuple) -> FoldOutcome:
        return self.partitions[self.route(candidate)].fold_insert(candidate, source, label)

    def node(self, nid: NodeId) -> TrgNode:
        return self.partitions[nid.partition].nodes[nid]

    def pending_count(self) -> int:
        return sum(p.pending_count() for p in self.partitions)

    def stats(self) -> dict:
        return store_stats(self.partitions)

    def finalize(self, partial: bool = False) -> "Trg":
        return finalize(self.partitions, partial=partial)


def store_stats(partitions: list) -> dict:
    hist = [p.live_count() for p in partitions]
    edges = sum(
        sum(1 for e in node.incoming if e.source is not None)
        for p in partitions for node in p.live_nodes()
    )
    return {
        "nodes": sum(hist),
        "edges": edges,
        "generated": sum(p.generated for p in partitions),
        "merged": sum(p.merged for p in partitions),
        "absorbed": sum(p.absorbed for p in partitions),
        "inclusion_checks": sum(p.inclusion_checks for p in partitions),
        "histogram": hist,
    }


@dataclass
class Trg:
    """Merged graph view produced by :func:`finalize`."""

    nodes: dict  # NodeId -> SymbolicState
    edges: list  # (source NodeId, label, target NodeId)
    initial: Optional[NodeId]
    histogram: list
    generated: int
    removed_edges: int
    pending: int = 0

    def canonical_ids(self) -> dict:
        order = sorted(self.nodes, key=lambda nid: self.nodes[nid].digest)
        return {nid: i for i, nid in enumerate(order)}

    def canonical_edges(self) -> list:
        ids = self.canonical_ids()
        return sorted((ids[s], label, ids[t]) for s, label, t in self.edges)


def _resolve_target(part: Partition, holder: TrgNode, candidate: Optional[SymbolicState]) -> NodeId:
    """Canonical covering node for an edge: the least-digest live includer."""
    if candidate is None or candidate.digest == holder.state.digest:
        return holder.id
    best = None
    for nid in part.buckets.get(holder.key, ()):
        node = part.nodes[nid]
        if node.status == ABSORBED:
            continue
        if best is not None and node.state.digest >= part.nodes[best].state.digest:
            continue
        if nid == holder.id or includes(candidate, node.state):
            best = nid
    return best if best is not None else holder.id


def resolve_forward(partitions: list, nid: NodeId) -> NodeId:
    """Follow absorption forwarding references to the live absorber."""
    seen = set()
    node = partitions[nid.partition].nodes[nid]
    while node.status == ABSORBED:
        if node.id in seen:
            raise IntegrityError(f"forwarding cycle through {node.id}")
        seen.add(node.id)
        fwd = node.forward
        if fwd is None or fwd not in partitions[fwd.partition].nodes:
            raise IntegrityError(f"absorbed node {node.id} forwards to missing node {fwd}")
        node = partitions[fwd.partition].nodes[fwd]
    return node.id


def finalize(partitions: list, partial: bool = False) -> Trg:
    """Apply pending removals and merge the partitions into one graph.

    Every removal entry must delete exactly one stored edge.  With
    ``partial`` (capped runs) missing or dangling edges are tolerated and
    dropped, since messages may have been in flight when the run stopped.
    """
    live: dict = {}
    pending = 0
    for part in partitions:
        for node in part.nodes.values():
            if node.status == ABSORBED:
                resolve_forward(partitions, node.id)
                continue
            if node.status == PENDING:
                pending += 1
            live[node.id] = node
    if pending and not partial:
        raise IntegrityError(f"{pending} node(s) still pending at finalize")
    stored = set()
    for node in live.values():
        for e in node.incoming:
            if e.source is not None:
                stored.add((e.source, e.label))
    doomed = set()
    for part in partitions:
        for rem in part.removals:
            k = (rem.removed, rem.label)
            if k in doomed:
                raise IntegrityError(f"pending removal {rem.removed} -{rem.label[1]}-> consumed twice")
            if k not in stored and not partial:
                raise IntegrityError(f"pending removal {rem.removed} -{rem.label[1]}-> matches no stored edge")
            doomed.add(k)
    edges = []
    removed_edges = 0
    initial = None
    dangling = []
    for part in partitions:
        for nid in sorted(part.nodes):
            node = part.nodes[nid]
            if node.status == ABSORBED:
                continue
            for e in node.incoming:
                if e.source is not None and (e.source, e.label) in doomed:
                    removed_edges += 1
                    continue
                target = _resolve_target(part, node, e.candidate)
                if e.source is None:
                    if initial is None or live[target].state.digest < live[initial].state.digest:
                        initial = target
                    continue
                if e.source not in live:
                    dangling.append((e.source, e.label, nid))
                    continue
                edges.append((e.source, e.label, target))
    if dangling and not partial:
        dump = "; ".join(f"{s} -{l[1]}-> {t}" for s, l, t in dangling[:10])
        raise IntegrityError(f"{len(dangling)} dangling edge(s) after removal pass: {dump}")
    return Trg(
        nodes={nid: node.state for nid, node in live.items()},
        edges=edges,
        initial=initial,
        histogram=[p.live_count() for p in partitions],
        generated=sum(p.generated for p in partitions),
        removed_edges=removed_edges,
        pending=pending,
    )

"""Partitioned workers: each peer owns one partition and its remaining list.

Mapped states that belong to another peer travel as batches of
``(state, source, label)`` items.  Two transports share :class:`WorkerCore`:
``process`` runs one OS process per worker over bounded queues, ``inline``
interleaves the workers in one process with seeded random scheduling and
message reordering (used to stress the termination protocol).
"""

from __future__ import annotations

import multiprocessing as mp
import queue
import random
import time
import traceback
from collections import defaultdict
from typing import Optional

from ..model.firing import successors
from ..model.net import Net
from ..model.state import SymbolicState
from ..partition import DISCRIMINANT, partition_of
from ..report import CAPPED, OK, Caps, RunReport
from ..store import INITIAL_LABEL, Partition, finalize, store_stats
from .termination import ProbeReply, TerminationDetector

CRASHED = "crashed"
QUEUE_BATCHES = 64  # bounded inbox capacity, in batches
OUTBOX_LIMIT = 512  # stop expanding while this many items wait to be sent
BATCH = 64


class WorkerCrash(RuntimeError):
    pass


class WorkerCore:
    """Map+Fold on one partition; transport-agnostic."""

    def __init__(self, index: int, n: int, net: Net, policy: str):
        self.index = index
        self.n = n
        self.net = net
        self.policy = policy
        self.part = Partition(index, n, policy)
        self.outbox: dict = defaultdict(list)
        self.sent = 0
        self.received = 0
        self.expanded = 0

    def receive(self, items: list) -> None:
        for state, source, label in items:
            self.part.fold_insert(state, source, label)
        self.received += len(items)

    def step(self) -> bool:
        node = self.part.pop_pending()
        if node is None:
            return False
        self.expanded += 1
        succ_list = successors(node.state, self.net)
        node.outgoing = [(b.transition, b.label) for b, _ in succ_list]
        for b, succ in succ_list:
            label = (b.transition, b.label)
            dest = partition_of(succ, self.policy, self.n)
            if dest == self.index:
                self.part.fold_insert(succ, node.id, label)
            else:
                self.outbox[dest].append((succ, node.id, label))
        return True

    def backlog(self) -> int:
        return sum(len(v) for v in self.outbox.values())

    def idle(self) -> bool:
        return not self.part.remaining and self.backlog() == 0


# --- multi-process transport -------------------------------------------------


def _flush(core: WorkerCore, inboxes: list) -> None:
    for dest in list(core.outbox):
        items = core.outbox[dest]
        while items:
            batch = items[:BATCH]
            try:
                inboxes[dest].put_nowait(batch)
            except queue.Full:
                break
            del items[:BATCH]
            core.sent += len(batch)
        if not items:
            del core.outbox[dest]


def _worker_main(core: WorkerCore, inboxes: list, ctl, replies, stop, generated) -> None:
    for q in inboxes:
        q.cancel_join_thread()
    inbox = inboxes[core.index]
    busy = idle_time = 0.0
    reported = 0
    try:
        while True:
            t0 = time.perf_counter()
            finish = False
            while True:
                try:
                    msg = ctl.get_nowait()
                except queue.Empty:
                    break
                if msg[0] == "probe":
                    _flush(core, inboxes)
                    replies.put(("probe", ProbeReply(core.index, msg[1], core.sent, core.received,
                                                     core.idle(), len(core.part.remaining))))
                elif msg[0] == "finish":
                    finish = True
            if finish:
                replies.put(("result", core.index, core.part,
                             {"expanded": core.expanded, "busy": busy, "idle": idle_time}))
                return
            if stop.is_set():
                time.sleep(0.001)
                continue
            worked = False
            for _ in range(8):
                try:
                    items = inbox.get_nowait()
                except queue.Empty:
                    break
                core.receive(items)
                worked = True
            if core.backlog() < OUTBOX_LIMIT and core.step():
                worked = True
            _flush(core, inboxes)
            if core.part.generated != reported:
                with generated.get_lock():
                    generated.value += core.part.generated - reported
                reported = core.part.generated
            if worked:
                busy += time.perf_counter() - t0
                continue
            try:
                items = inbox.get(timeout=0.002)
            except queue.Empty:
                idle_time += time.perf_counter() - t0
                continue
            core.receive(items)
            busy += time.perf_counter() - t0
    except BaseException:
        replies.put(("error", core.index, traceback.format_exc()))


def _run_processes(net, initial, n, policy, caps, probe_interval=0.005):
    ctx = mp.get_context("fork")
    inboxes = [ctx.Queue(QUEUE_BATCHES) for _ in range(n)]
    ctls = [ctx.Queue() for _ in range(n)]
    replies = ctx.Queue()
    stop = ctx.Event()
    generated = ctx.Value("q", 0)
    procs = []
    for i in range(n):
        core = WorkerCore(i, n, net, policy)
        p = ctx.Process(target=_worker_main, args=(core, inboxes, ctls[i], replies, stop, generated), daemon=True)
        p.start()
        procs.append(p)
    t0 = time.perf_counter()
    inboxes[partition_of(initial, policy, n)].put([(initial, None, INITIAL_LABEL)])
    detector = TerminationDetector(n, external_sent=1)
    front, status, reason = [], OK, ""
    wave = 0
    try:
        while True:
            why = caps.hit(0, generated.value, time.perf_counter() - t0)
            if why:
                status, reason = CAPPED, why
                stop.set()
                break
            wave += 1
            for c in ctls:
                c.put(("probe", wave))
            got = {}
            while len(got) < n:
                try:
                    kind, *rest = replies.get(timeout=1.0)
                except queue.Empty:
                    dead = [i for i, p in enumerate(procs) if not p.is_alive()]
                    if dead:
                        raise WorkerCrash(f"worker(s) {dead} exited unexpectedly")
                    continue
                if kind == "error":
                    raise WorkerCrash(f"worker {rest[0]} failed:\n{rest[1]}")
                r = rest[0]
                if r.wave == wave:
                    got[r.peer] = r
            replies_ = [got[i] for i in range(n)]
            front.append((wave, sum(r.pending for r in replies_), "workers"))
            if detector.observe(replies_):
                break
            time.sleep(probe_interval)
        for c in ctls:
            c.put(("finish",))
        parts, usage = [None] * n, [None] * n
        while any(p is None for p in parts):
            try:
                kind, *rest = replies.get(timeout=5.0)
            except queue.Empty:
                if any(not p.is_alive() and parts[i] is None for i, p in enumerate(procs)):
                    raise WorkerCrash("a worker exited before returning its partition")
                continue
            if kind == "result":
                parts[rest[0]], usage[rest[0]] = rest[1], rest[2]
            elif kind == "error":
                raise WorkerCrash(f"worker {rest[0]} failed:\n{rest[1]}")
    finally:
        stop.set()
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():
                p.terminate()
    wall = time.perf_counter() - t0
    idle = [u["idle"] / max(u["busy"] + u["idle"], 1e-9) for u in usage]
    extra = {"waves": detector.waves, "idle_fraction": idle, "expanded": [u["expanded"] for u in usage]}
    return parts, front, status, reason, wall, extra


# --- in-process transport ----------------------------------------------------


def _run_inline(net, initial, n, policy, caps, seed: int = 0, deliver_bias: float = 0.3):
    """Randomly interleaved workers; messages delivered in random order."""
    rng = random.Random(seed)
    cores = [WorkerCore(i, n, net, policy) for i in range(n)]
    in_flight: list = [(partition_of(initial, policy, n), [(initial, None, INITIAL_LABEL)])]
    detector = TerminationDetector(n, external_sent=1)
    t0 = time.perf_counter()
    ticks = [0] * n
    idle_ticks = [0] * n
    wave, wave_order, wave_replies = 0, [], []
    premature = 0
    front, status, reason = [], OK, ""
    while True:
        why = caps.hit(0, sum(c.part.generated for c in cores), time.perf_counter() - t0)
        if why:
            status, reason = CAPPED, why
            break
        roll = rng.random()
        if in_flight and roll < deliver_bias:
            dest, items = in_flight.pop(rng.randrange(len(in_flight)))
            cores[dest].receive(items)
        elif roll < 0.85:
            w = rng.randrange(n)
            ticks[w] += 1
            core = cores[w]
            if not core.step():
                idle_ticks[w] += 1
            for dest in list(core.outbox):
                items = core.outbox.pop(dest)
                for i in range(0, len(items), BATCH):
                    in_flight.append((dest, items[i:i + BATCH]))
                core.sent += len(items)
        else:
            if not wave_order:
                wave += 1
                wave_order = rng.sample(range(n), n)
                wave_replies = []
            w = wave_order.pop()
            c = cores[w]
            wave_replies.append(ProbeReply(w, wave, c.sent, c.received, c.idle(), len(c.part.remaining)))
            if not wave_order:
                front.append((wave, sum(r.pending for r in wave_replies), "workers"))
                if detector.observe(wave_replies):
                    if in_flight or not all(c.idle() for c in cores):
                        premature += 1
                        continue
                    break
    extra = {
        "waves": detector.waves,
        "premature_terminations": premature,
        "idle_fraction": [idle_ticks[i] / max(ticks[i], 1) for i in range(n)],
        "expanded": [c.expanded for c in cores],
        "seed": seed,
    }
    return [c.part for c in cores], front, status, reason, time.perf_counter() - t0, extra


def build_workers(
    net: Net,
    initial: SymbolicState,
    n: int = 2,
    policy: str = DISCRIMINANT,
    caps: Optional[Caps] = None,
    backend: str = "process",
    seed: int = 0,
) -> tuple:
    """Run ``n`` peers to global quiescence and merge; returns ``(trg, report)``.

    On a worker crash the returned graph is ``None`` and the report status is
    ``crashed``.
    """
    if n < 1:
        raise ValueError("worker count must be positive")
    caps = caps or Caps()
    config = {"n": n, "policy": policy, "backend": backend}
    try:
        if backend == "process":
            parts, front, status, reason, wall, extra = _run_processes(net, initial, n, policy, caps)
        elif backend == "inline":
            parts, front, status, reason, wall, extra = _run_inline(net, initial, n, policy, caps, seed)
        else:
            raise ValueError(f"unknown workers backend {backend!r}")
    except WorkerCrash as exc:
        return None, RunReport("workers", config, status=CRASHED, reason=str(exc))
    trg = finalize(parts, partial=status != OK)
    st = store_stats(parts)
    extra.update(inclusion_checks=st["inclusion_checks"], removed_edges=trg.removed_edges,
                 pending_at_end=trg.pending)
    report = RunReport(
        engine="workers", config=config, nodes=len(trg.nodes), edges=len(trg.edges),
        generated=st["generated"], merged=st["merged"], absorbed=st["absorbed"], wall_time=wall,
        status=status, reason=reason, histogram=trg.histogram, front=front, extra=extra,
    )
    return trg, report

"""Acceptance criteria 1-8.  Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""

import contextlib
import csv
import io
import itertools
import os
import random
import sys
import time
from fractions import Fraction

import pytest

from tbtrg import corpus
from tbtrg.cli import bench_rows
from tbtrg.constraints import (
    ConstraintSet,
    LinearIneq,
    eliminate,
    entails,
    entails_all,
    fourier_motzkin,
    is_satisfiable,
)
from tbtrg.constraints.dbm import is_difference_set
from tbtrg.engines import himapred, sequential, workers
from tbtrg.engines.controller import DOWN, UP, HybridConfig, replay
from tbtrg.engines.himapred import build_hybrid
from tbtrg.engines.sequential import build_sequential
from tbtrg.engines.workers import build_workers
from tbtrg.export import canonical_dump
from tbtrg.model import ANON, SymbolicState, includes, make_marking
from tbtrg.oracles import SampleGrid, brute_expand, containment_witness, exact_entails, exact_satisfiable, grid_satisfiable
from tbtrg.partition import DISCRIMINANT, SOFT, feature
from tbtrg.report import CAPPED, OK, Caps, bench_csv
from tbtrg.store import INITIAL_LABEL, PendingRemoval, TrgStore

# pinned tolerances
EQUIV_WORKER_COUNTS = (1, 2, 4, 8)
EQUIV_HYBRID = ((200, 50), (1, 0.5))  # the second forces cluster mode from the first step
EQUIV_BUDGET_S = 300
ORACLE_MIN_PAIRS = 500
ORACLE_MAX_SYMBOLS = 4
ORACLE_COEFF_RANGE = (-3, 3)
ORACLE_BUDGET_S = 120
BALANCE_PARTITIONS = 32
CONTROLLER_T, CONTROLLER_H = 200, 50
COVER_DEPTH = 3
SCALING_CAP = 20000
SCALING_WORKERS = 8
SCALING_RATIO = 0.7
SCALING_BUDGET_S = 900


# --- shared run of every engine over the corpus -------------------------------


@contextlib.contextmanager
def recording_successors(sink: dict):
    """Capture every state produced by in-process expansions."""
    originals = {mod: mod.successors for mod in (sequential, workers, himapred)}

    def wrap(fn):
        def recorded(state, net):
            out = fn(state, net)
            for _, s in out:
                sink.setdefault(s.digest, s)
            return out
        return recorded

    for mod, fn in originals.items():
        mod.successors = wrap(fn)
    try:
        yield
    finally:
        for mod, fn in originals.items():
            mod.successors = fn


def _engine_runs(net, s):
    yield "seq", lambda: build_sequential(net, s)
    for n in EQUIV_WORKER_COUNTS:
        yield f"workers-n{n}", lambda n=n: build_workers(net, s, n=n, backend="process")
    yield "workers-inline-n4", lambda: build_workers(net, s, n=4, backend="inline", seed=11)
    for T, H in EQUIV_HYBRID:
        yield f"himapred-T{T}-H{H}", lambda T=T, H=H: build_hybrid(net, s, HybridConfig(T=T, H=H, n=4, backend="inline"))
        yield f"himapred-T{T}-H{H}-process", lambda T=T, H=H: build_hybrid(
            net, s, HybridConfig(T=T, H=H, n=2, backend="process"))


@pytest.fixture(scope="module")
def corpus_runs():
    t0 = time.perf_counter()
    runs = {}
    for name in corpus.CORPUS:
        net, s = corpus.load(name)
        generated = {s.digest: s}
        per_engine = {}
        with recording_successors(generated):
            for label, run in _engine_runs(net, s):
                trg, rep = run()
                per_engine[label] = (trg, rep)
        for trg, _ in per_engine.values():
            if trg is not None:
                for x in trg.nodes.values():
                    generated.setdefault(x.digest, x)
        runs[name] = {"net": net, "initial": s, "engines": per_engine, "generated": generated}
    return runs, time.perf_counter() - t0


# --- criterion 1 -----------------------------------------------------------------


def test_criterion_1_engine_equivalence(corpus_runs, criterion):
    runs, elapsed = corpus_runs
    mismatches = []
    for name, data in runs.items():
        net = data["net"]
        ref = canonical_dump(data["engines"]["seq"][0], net)
        for label, (trg, rep) in data["engines"].items():
            if trg is None or rep.status != OK or canonical_dump(trg, net) != ref:
                mismatches.append(f"{name}/{label}")
        hyb = data["engines"][f"himapred-T{EQUIV_HYBRID[1][0]}-H{EQUIV_HYBRID[1][1]}"][1]
        if hyb.extra["iterations"] == 0:
            mismatches.append(f"{name}/cluster-mode-not-reached")
    runs_count = sum(len(d["engines"]) for d in runs.values())
    ok = not mismatches and elapsed < EQUIV_BUDGET_S
    criterion(1, ok, f"{runs_count} runs over {len(runs)} models, mismatches={mismatches or 'none'}, "
                     f"{elapsed:.1f}s (budget {EQUIV_BUDGET_S}s)")
    assert not mismatches
    assert elapsed < EQUIV_BUDGET_S


# --- criterion 2 -----------------------------------------------------------------


def _random_row(rng, syms):
    while True:
        chosen = rng.sample(syms, rng.randint(1, min(3, len(syms))))
        coeffs = {x: rng.randint(*ORACLE_COEFF_RANGE) for x in chosen}
        bound = Fraction(rng.randint(-12, 12), rng.choice((1, 2)))
        row = LinearIneq.make(coeffs, bound)
        if not isinstance(row, bool):
            return row


def _random_diff_row(rng, syms):
    x, y = rng.sample(syms + [None], 2)
    return LinearIneq.diff(x, y, Fraction(rng.randint(-8, 8), rng.choice((1, 2))))


def _weakened(rng, c):
    rows = list(c)
    if len(rows) >= 2 and rng.random() < 0.5:
        a, b = rng.sample(rows, 2)
        coeffs = dict(a.coeffs)
        for x, v in b.coeffs.items():
            coeffs[x] = coeffs.get(x, 0) + v
        row = LinearIneq.make(coeffs, a.bound + b.bound + rng.choice((0, 1)))
    else:
        a = rng.choice(rows)
        row = LinearIneq.make(a.coeffs, a.bound + rng.choice((0, Fraction(1, 2), 2)))
    return row if not isinstance(row, bool) else None


def test_criterion_2_kernel_oracles(criterion):
    rng = random.Random(20240601)
    t0 = time.perf_counter()
    pairs = disagreements = entailed = unsat = 0
    while pairs < ORACLE_MIN_PAIRS:
        k = rng.randint(1, ORACLE_MAX_SYMBOLS)
        syms = [f"T{i}" for i in range(k)]
        c = ConstraintSet.of([_random_row(rng, syms) for _ in range(rng.randint(1, 5))])
        r = _weakened(rng, c) if rng.random() < 0.4 else _random_row(rng, syms)
        if r is None:
            continue
        pairs += 1
        grid = SampleGrid.uniform(syms, -5, 5, 1)
        sat = is_satisfiable(c)
        # two-sided check against exact vertex enumeration, one-sided against the grid
        if sat != exact_satisfiable(c) or (not sat and grid_satisfiable(c, grid) is not None):
            disagreements += 1
            continue
        if not sat:
            unsat += 1
            continue
        claim = entails(c, r)
        entailed += claim
        if claim != exact_entails(c, r):
            disagreements += 1
        elif claim and containment_witness(c, ConstraintSet.of([r]), grid) is not None:
            disagreements += 1

    diff_cases = diff_bad = 0
    while diff_cases < 300:
        syms = [f"T{i}" for i in range(rng.randint(2, ORACLE_MAX_SYMBOLS))]
        c = ConstraintSet.of([_random_diff_row(rng, syms) for _ in range(rng.randint(1, 6))])
        if not is_difference_set(c) or not is_satisfiable(c):
            continue
        for s in sorted(c.symbols):
            diff_cases += 1
            a, b = eliminate(c, s), fourier_motzkin(c, s)
            if not (entails_all(a, b) and entails_all(b, a)):
                diff_bad += 1
    elapsed = time.perf_counter() - t0
    ok = disagreements == 0 and diff_bad == 0 and elapsed < ORACLE_BUDGET_S
    criterion(2, ok, f"{pairs} pairs ({entailed} entailed, {unsat} unsatisfiable), {disagreements} disagreements; "
                     f"{diff_cases} difference eliminations, {diff_bad} FW/FM mismatches; {elapsed:.1f}s")
    assert disagreements == 0 and diff_bad == 0
    assert elapsed < ORACLE_BUDGET_S


# --- criterion 3 -----------------------------------------------------------------


def test_criterion_3_partition_necessity(corpus_runs, criterion):
    runs, _ = corpus_runs
    violations = checked = included = total = 0
    for data in runs.values():
        states = list(data["generated"].values())
        total += len(states)
        keys = [(feature(x, SOFT), feature(x, DISCRIMINANT)) for x in states]
        for i, j in itertools.permutations(range(len(states)), 2):
            if keys[i] == keys[j]:
                # equal keys cannot violate necessity
                continue
            checked += 1
            if includes(states[i], states[j]):
                violations += 1
        # a positive control: inclusions do occur among equal-key pairs
        by_key = {}
        for x, k in zip(states, keys):
            by_key.setdefault(k, []).append(x)
        for group in by_key.values():
            for a, b in itertools.permutations(group[:20], 2):
                included += includes(a, b)
    criterion(3, violations == 0, f"{total} generated states, {checked} differing-key pairs checked, "
                                  f"{violations} violations ({included} inclusions among equal-key pairs)")
    assert violations == 0


# --- criterion 4 -----------------------------------------------------------------


def test_criterion_4_partition_balance(criterion):
    rows = bench_rows(["skew"], ["workers"], [BALANCE_PARTITIONS], [SOFT, DISCRIMINANT], 200, 50, Caps(), "inline")
    text = bench_csv(rows)
    shares = {r["policy"]: float(r["max_partition_share"]) for r in csv.DictReader(io.StringIO(text))}
    ok = shares[DISCRIMINANT] < shares[SOFT]
    criterion(4, ok, f"skew, {BALANCE_PARTITIONS} partitions: max share soft={shares[SOFT]:.4f}, "
                     f"discriminant={shares[DISCRIMINANT]:.4f}")
    assert ok


# --- criterion 5 -----------------------------------------------------------------

CONTROLLER_SUITE = [
    ([150, 250, 180, 140], [(1, 250, UP), (3, 140, DOWN)]),
    ([100, 199, 150, 120], []),
    ([200, 151, 199, 150, 149, 200], [(0, 200, UP), (3, 150, DOWN), (5, 200, UP)]),
    ([300, 160, 240, 155, 190, 160], [(0, 300, UP)]),
    ([0, 500, 0, 500, 0], [(1, 500, UP), (2, 0, DOWN), (3, 500, UP), (4, 0, DOWN)]),
    ([250, 250, 151, 151, 150, 150, 199, 200], [(0, 250, UP), (4, 150, DOWN), (7, 200, UP)]),
]


def test_criterion_5_controller_banding(criterion):
    wrong = [i for i, (trace, expected) in enumerate(CONTROLLER_SUITE)
             if replay(trace, CONTROLLER_T, CONTROLLER_H) != expected]
    criterion(5, not wrong, f"{len(CONTROLLER_SUITE)} traces with T={CONTROLLER_T}, H={CONTROLLER_H}, "
                            f"mismatching traces: {wrong or 'none'}")
    assert not wrong


# --- criterion 6 -----------------------------------------------------------------


def _st(places, rows=()):
    return SymbolicState(make_marking(places), ConstraintSet.of(rows), "now")


def _window(width):
    return _st([["T0"], [], []], [LinearIneq.diff("T0", "now", 0), LinearIneq.diff("now", "T0", width)])


def test_criterion_6_fold_edge_semantics(criterion):
    a, b = _window(1), _window(2)
    f, c = _st([[ANON], [], []]), _st([[], [], ["T0"]], [LinearIneq.diff("T0", "now", 0)])
    e, d = _st([[], [ANON], []]), _st([["T0"], ["T1"], []])
    store = TrgStore(8, DISCRIMINANT)
    home = store.route(a)
    layout_ok = store.route(b) == home and home not in (store.route(e), store.route(d))
    lab = lambda x: (x, f"{x}()")  # noqa: E731
    fid = store.fold(f, None, INITIAL_LABEL).node
    cid = store.fold(c, fid, lab("fc")).node
    aid = store.fold(a, fid, lab("fa")).node
    merged = store.fold(a, cid, lab("ca")).kind == "merged"
    store.partitions[home].take(aid).outgoing = [lab("ae"), lab("ad")]
    eid = store.fold(e, aid, lab("ae")).node
    did = store.fold(d, aid, lab("ad")).node
    out = store.fold(b, eid, lab("eb"))
    bid = out.node
    part = store.partitions[home]
    redirected = ({(x.source, x.label[0]) for x in store.node(bid).incoming} >= {(fid, "fa"), (cid, "ca")}
                  and store.node(aid).incoming == [])
    removals = part.removals == [PendingRemoval(aid, bid, lab("ae")), PendingRemoval(aid, bid, lab("ad"))]
    deferred = (any(x.source == aid for x in store.node(eid).incoming)
                and any(x.source == aid for x in store.node(did).incoming))
    for p in store.partitions:
        while p.pop_pending():
            pass
    trg = store.finalize()
    applied = trg.removed_edges == 2 and not any(s == aid for s, _, _ in trg.edges)
    ok = layout_ok and merged and out.kind == "absorbs" and redirected and removals and deferred and applied
    criterion(6, ok, f"absorbs={out.kind == 'absorbs'}, local redirects f->b c->b={redirected}, "
                     f"pending removals={len(part.removals)}, deferred until finalize={deferred}, "
                     f"edges removed at finalize={trg.removed_edges}")
    assert ok


# --- criterion 7 -----------------------------------------------------------------


def test_criterion_7_cover(corpus_runs, criterion):
    runs, _ = corpus_runs
    uncovered = []
    brute_total = 0
    for name, data in runs.items():
        brute = list(brute_expand(data["net"], data["initial"], COVER_DEPTH).values())
        brute_total += len(brute)
        for label, (trg, _) in data["engines"].items():
            by_key = {}
            for x in trg.nodes.values():
                by_key.setdefault(feature(x, DISCRIMINANT), []).append(x)
            for s in brute:
                if not any(includes(s, y) for y in by_key.get(feature(s, DISCRIMINANT), ())):
                    uncovered.append(f"{name}/{label}")
                    break
    criterion(7, not uncovered, f"{brute_total} depth-{COVER_DEPTH} states against every engine graph, "
                                f"uncovered in: {uncovered or 'none'}")
    assert not uncovered


# --- criterion 8 -----------------------------------------------------------------


def test_criterion_8_scaling(criterion):
    net, s = corpus.load(corpus.SCALING_MODEL)
    caps = Caps(max_generated=SCALING_CAP, max_seconds=SCALING_BUDGET_S / 2)
    t0 = time.perf_counter()
    _, seq = build_sequential(net, s, caps=caps)
    t_seq = time.perf_counter() - t0
    t0 = time.perf_counter()
    _, par = build_workers(net, s, n=SCALING_WORKERS, caps=caps, backend="process")
    t_par = time.perf_counter() - t0
    both_capped = seq.status == CAPPED and par.status == CAPPED and "generated" in seq.reason + par.reason
    ratio = t_par / t_seq
    ok = both_capped and ratio < SCALING_RATIO
    criterion(8, ok, f"{corpus.SCALING_MODEL} capped at {SCALING_CAP} generated: sequential {t_seq:.1f}s, "
                     f"workers n={SCALING_WORKERS} {t_par:.1f}s, ratio {ratio:.2f} (need < {SCALING_RATIO}); "
                     f"cpu cores available: {os.cpu_count()}")
    assert both_capped
    assert ratio < SCALING_RATIO


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))

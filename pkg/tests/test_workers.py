import pytest

from tbtrg.engines import workers
from tbtrg.engines.termination import ProbeReply, TerminationDetector
from tbtrg.engines.workers import CRASHED, WorkerCore, build_workers
from tbtrg.export import canonical_dump
from tbtrg.partition import DISCRIMINANT, SOFT, assign, feature
from tbtrg.report import CAPPED, OK, Caps


def _wave(w, counts, idle=True):
    return [ProbeReply(i, w, s, r, idle) for i, (s, r) in enumerate(counts)]


def test_detector_needs_two_equal_waves():
    d = TerminationDetector(2, external_sent=1)
    assert not d.observe(_wave(1, [(3, 1), (0, 3)]))
    assert d.observe(_wave(2, [(3, 1), (0, 3)]))


def test_detector_rejects_in_flight_and_busy():
    d = TerminationDetector(2)
    # a message is in flight: sent 2, received 1
    assert not d.observe(_wave(1, [(2, 0), (0, 1)]))
    assert not d.observe(_wave(2, [(2, 0), (0, 1)]))
    d = TerminationDetector(2)
    assert not d.observe(_wave(1, [(1, 0), (0, 1)], idle=False))
    assert not d.observe(_wave(2, [(1, 0), (0, 1)]))
    # counts moved between waves
    assert not d.observe(_wave(3, [(2, 0), (0, 1)]))
    assert not d.observe(_wave(4, [(2, 1), (0, 1)]))
    assert d.observe(_wave(5, [(2, 1), (0, 1)]))
    with pytest.raises(ValueError):
        d.observe(_wave(6, [(0, 0)]))


def test_core_keeps_local_successors(models):
    net, s = models["race"]
    core = WorkerCore(assign(feature(s, DISCRIMINANT), 4), 4, net, DISCRIMINANT)
    core.receive([(s, None, ("", "initial"))])
    assert not core.idle()
    assert core.step()
    for dest, items in core.outbox.items():
        assert dest != core.index
        for state, source, _ in items:
            assert assign(feature(state, DISCRIMINANT), 4) == dest
            assert source is not None


@pytest.mark.parametrize("name", ["chain", "choice", "race", "skew", "cycle"])
def test_inline_stress_never_terminates_early(models, seq_builds, name):
    net, s = models[name]
    ref = canonical_dump(seq_builds[name][0], net)
    for seed in range(12):
        for n in (2, 3, 5):
            trg, rep = build_workers(net, s, n=n, backend="inline", seed=seed)
            assert rep.extra["premature_terminations"] == 0
            assert rep.status == OK
            assert canonical_dump(trg, net) == ref, (seed, n)


def test_process_backend_matches_sequential(models, seq_builds):
    for name in ("race", "skew"):
        net, s = models[name]
        for n in (1, 3):
            trg, rep = build_workers(net, s, n=n, backend="process")
            assert rep.status == OK
            assert canonical_dump(trg, net) == canonical_dump(seq_builds[name][0], net)
            assert len(rep.histogram) == n and sum(rep.histogram) == rep.nodes
            assert len(rep.extra["idle_fraction"]) == n


@pytest.mark.parametrize("policy", [SOFT, DISCRIMINANT])
def test_partition_ownership(models, policy):
    net, s = models["skew"]
    parts, *_ = workers._run_inline(net, s, 4, policy, Caps(), seed=7)
    for part in parts:
        for node in part.nodes.values():
            assert assign(feature(node.state, policy), 4) == part.index


def test_capped_run(models):
    net, s = models["gasburner"]
    trg, rep = build_workers(net, s, n=2, backend="inline", caps=Caps(max_generated=100))
    assert rep.status == CAPPED
    assert trg is not None and trg.generated >= 100


def _boom(state, net):
    raise RuntimeError("injected fault")


def test_worker_crash_reports(models, monkeypatch):
    net, s = models["race"]
    monkeypatch.setattr(workers, "successors", _boom)
    trg, rep = build_workers(net, s, n=2, backend="process")
    assert trg is None
    assert rep.status == CRASHED
    assert "injected fault" in rep.reason


def test_bad_arguments(models):
    net, s = models["chain"]
    with pytest.raises(ValueError):
        build_workers(net, s, n=0)
    with pytest.raises(ValueError):
        build_workers(net, s, backend="carrier-pigeon")

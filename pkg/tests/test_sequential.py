import json

from tbtrg.engines.sequential import build_sequential
from tbtrg.export import canonical_dump
from tbtrg.parser import parse_net_text
from tbtrg.report import CAPPED, FRONT_HEADER, OK, Caps


def test_no_enabled_transition():
    net, s = parse_net_text("places: p, q\ntransition t: q -> p; min: 0; max: 1\nmarking: p = {A}\n")
    trg, rep = build_sequential(net, s)
    assert (len(trg.nodes), len(trg.edges)) == (1, 0)
    assert rep.status == OK and rep.generated == 1


def test_one_transition(one_step):
    net, s = one_step
    trg, rep = build_sequential(net, s)
    assert (len(trg.nodes), len(trg.edges)) == (2, 1)
    ((src, label, dst),) = trg.edges
    assert src == trg.initial and dst != src and label[0] == "t"


def test_cycle_closes(models):
    net, s = models["cycle"]
    trg, _ = build_sequential(net, s)
    assert len(trg.nodes) == 2
    pairs = {(a, b) for a, _, b in trg.edges}
    assert len(pairs) == 2
    (a, b), = [p for p in pairs if p[0] == trg.initial]
    assert (b, a) in pairs


def test_every_node_reached(seq_builds):
    for name, (trg, rep) in seq_builds.items():
        targets = {t for _, _, t in trg.edges}
        for nid in trg.nodes:
            assert nid == trg.initial or nid in targets, name
        assert rep.generated == rep.nodes + rep.merged + rep.absorbed, name
        assert sum(rep.histogram) == rep.nodes
        assert rep.front[-1][1] == 0


def test_deterministic(models, seq_builds):
    for name in ("race", "skew", "choice"):
        net, s = models[name]
        again, rep = build_sequential(net, s)
        assert canonical_dump(again, net) == canonical_dump(seq_builds[name][0], net)
        assert rep.generated == seq_builds[name][1].generated


def test_caps_abort_with_partial_result(models):
    net, s = models["gasburner"]
    trg, rep = build_sequential(net, s, caps=Caps(max_nodes=20))
    assert rep.status == CAPPED and "node" in rep.reason
    # checked after each expansion, so overshoot is at most one fan-out
    assert 20 <= len(trg.nodes) <= 20 + len(net.transitions)
    trg, rep = build_sequential(net, s, caps=Caps(max_generated=50))
    assert rep.status == CAPPED and rep.generated >= 50
    trg, rep = build_sequential(net, s, caps=Caps(max_seconds=0))
    assert rep.status == CAPPED


def test_report_outputs(seq_builds):
    _, rep = seq_builds["skew"]
    lines = rep.front_csv().splitlines()
    assert lines[0] == ",".join(FRONT_HEADER)
    sizes = [int(line.split(",")[1]) for line in lines[1:]]
    assert max(sizes) > sizes[0] >= 1 and sizes[-1] == 0
    data = json.loads(rep.to_json())
    assert data["engine"] == "seq" and data["nodes"] == rep.nodes
    assert rep.histogram_csv().splitlines()[0] == "partition,nodes,share"

"""Graph exports: canonical JSON lines and Graphviz DOT."""

from __future__ import annotations

import json

from .model.net import Net
from .store import Trg


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def canonical_lines(trg: Trg, net: Net) -> list:
    """Nodes ordered by digest, then edges by (source, label, target)."""
    ids = trg.canonical_ids()
    order = sorted(ids, key=ids.get)
    out = []
    for nid in order:
        s = trg.nodes[nid]
        out.append(_dumps({
            "kind": "node",
            "id": ids[nid],
            "digest": s.digest.hex(),
            "initial": nid == trg.initial,
            "state": s.render(net.places),
        }))
    for src, label, dst in trg.canonical_edges():
        out.append(_dumps({
            "kind": "edge",
            "source": src,
            "transition": label[0],
            "binding": label[1],
            "target": dst,
        }))
    return out


def canonical_dump(trg: Trg, net: Net) -> str:
    return "".join(line + "\n" for line in canonical_lines(trg, net))


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def to_dot(trg: Trg, net: Net) -> str:
    ids = trg.canonical_ids()
    lines = [f'digraph "{_dot_escape(net.name)}" {{', "  node [shape=box, fontname=monospace];"]
    for nid in sorted(ids, key=ids.get):
        label = _dot_escape(trg.nodes[nid].render(net.places))
        extra = ", penwidth=2" if nid == trg.initial else ""
        lines.append(f'  n{ids[nid]} [label="{label}"{extra}];')
    for src, label, dst in trg.canonical_edges():
        lines.append(f'  n{src} -> n{dst} [label="{_dot_escape(label[1])}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def read_dump_counts(text: str) -> tuple:
    """(nodes, edges) counted from a JSON-lines dump."""
    nodes = edges = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        kind = json.loads(line)["kind"]
        nodes += kind == "node"
        edges += kind == "edge"
    return nodes, edges

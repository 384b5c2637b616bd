"""Run reports: JSON summary plus CSV series for fronts and partition histograms."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

OK = "ok"
CAPPED = "capped"

FRONT_HEADER = ("step", "front_size", "mode")
HISTOGRAM_HEADER = ("partition", "nodes", "share")
BENCH_HEADER = (
    "model", "architecture", "compute_units", "compute_model", "policy", "T", "H",
    "nodes", "edges", "generated", "max_partition_share", "exec_time_s", "status",
)


@dataclass
class Caps:
    max_nodes: int = 10**6
    max_seconds: float = 3600.0
    max_generated: Optional[int] = None

    def hit(self, live: int, generated: int, elapsed: float) -> Optional[str]:
        if live > self.max_nodes:
            return f"node cap {self.max_nodes} exceeded"
        if self.max_generated is not None and generated >= self.max_generated:
            return f"generated-state cap {self.max_generated} reached"
        if elapsed > self.max_seconds:
            return f"time cap {self.max_seconds}s exceeded"
        return None


@dataclass
class RunReport:
    engine: str
    config: dict
    nodes: int = 0
    edges: int = 0
    generated: int = 0
    merged: int = 0
    absorbed: int = 0
    wall_time: float = 0.0
    status: str = OK
    reason: str = ""
    switches: list = field(default_factory=list)  # (step, front_size, "up" | "down")
    histogram: list = field(default_factory=list)
    front: list = field(default_factory=list)  # (step, front_size, mode)
    extra: dict = field(default_factory=dict)

    @property
    def max_share(self) -> float:
        total = sum(self.histogram)
        return max(self.histogram) / total if total else 0.0

    def to_json(self) -> str:
        d = asdict(self)
        d["max_partition_share"] = self.max_share
        return json.dumps(d, indent=2, sort_keys=True, default=str)

    def front_csv(self) -> str:
        return _csv(FRONT_HEADER, self.front)

    def histogram_csv(self) -> str:
        total = sum(self.histogram) or 1
        rows = [(i, c, f"{c / total:.6f}") for i, c in enumerate(self.histogram)]
        return _csv(HISTOGRAM_HEADER, rows)

    def summary(self) -> str:
        cfg = " ".join(f"{k}={v}" for k, v in sorted(self.config.items()))
        lines = [
            f"engine     {self.engine} ({cfg})",
            f"status     {self.status}{': ' + self.reason if self.reason else ''}",
            f"nodes      {self.nodes}",
            f"edges      {self.edges}",
            f"generated  {self.generated} (merged {self.merged}, absorbed {self.absorbed})",
            f"wall time  {self.wall_time:.3f}s",
            f"histogram  {self.histogram} (max share {self.max_share:.3f})",
        ]
        if self.switches:
            lines.append(f"switches   {self.switches}")
        return "\n".join(lines)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def bench_csv(rows: list) -> str:
    return _csv(BENCH_HEADER, [[r.get(h, "") for h in BENCH_HEADER] for r in rows])

"""Command-line front end: ``tbtrg build|export|stats|bench|verify-equiv``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus
from .engines.controller import HybridConfig
from .engines.himapred import build_hybrid
from .engines.sequential import build_sequential
from .engines.workers import build_workers
from .export import canonical_dump, to_dot
from .parser import NetParseError
from .partition import DISCRIMINANT, POLICIES
from .report import CAPPED, OK, Caps, bench_csv
from .store import IntegrityError

EXIT_OK = 0
EXIT_DIFFERENT = 1
EXIT_PARSE = 2
EXIT_CAP = 3
EXIT_INTEGRITY = 4

ENGINES = ("seq", "workers", "himapred")


def run_engine(net, initial, engine: str, n: int = 2, policy: str = DISCRIMINANT, T: float = 200,
               H: float = 50, caps: Caps | None = None, seed_order: int | None = None,
               backend: str = "process", combine: bool = False):
    """Dispatch to one engine; returns ``(trg, report)``."""
    if engine == "seq":
        return build_sequential(net, initial, policy, caps, order_seed=seed_order)
    if engine == "workers":
        if seed_order is not None:
            backend = "inline"
        return build_workers(net, initial, n, policy, caps, backend=backend, seed=seed_order or 0)
    if engine == "himapred":
        cfg = HybridConfig(T=T, H=H, policy=policy, n=n, backend=backend, combine=combine)
        return build_hybrid(net, initial, cfg, caps)
    raise ValueError(f"unknown engine {engine!r}")


def _number(text: str):
    v = float(text)
    return int(v) if v.is_integer() else v


def _engine_flags(p: argparse.ArgumentParser, prefix: str = "") -> None:
    p.add_argument(f"--{prefix}engine", choices=ENGINES, default="seq")
    p.add_argument("--n", type=int, default=2, help="workers or reducers")
    p.add_argument("--policy", choices=POLICIES, default=DISCRIMINANT)
    p.add_argument("--T", type=_number, default=200, help="front size that switches to cluster mode")
    p.add_argument("--H", type=_number, default=50, help="hysteresis below T before switching back")
    p.add_argument("--backend", choices=("process", "inline"), default="process")
    p.add_argument("--combine", action="store_true", help="enable the sibling combine step (himapred)")


def _cap_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-nodes", type=int, default=10**6)
    p.add_argument("--max-seconds", type=float, default=3600.0)
    p.add_argument("--max-generated", type=int, default=None)
    p.add_argument("--seed-order", type=int, default=None,
                   help="seeded random exploration order instead of FIFO / real scheduling")


def _caps(args) -> Caps:
    return Caps(args.max_nodes, args.max_seconds, args.max_generated)


def _run(args, engine=None):
    net, initial = corpus.load(args.net)
    trg, report = run_engine(net, initial, engine or args.engine, args.n, args.policy, args.T, args.H,
                             _caps(args), args.seed_order, args.backend, args.combine)
    return net, trg, report


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _status_code(report) -> int:
    if report.status == OK:
        return EXIT_OK
    if report.status == CAPPED:
        return EXIT_CAP
    return EXIT_INTEGRITY


def cmd_build(args) -> int:
    net, trg, report = _run(args)
    if trg is not None:
        _write(args.dot, to_dot(trg, net))
        _write(args.jsonl, canonical_dump(trg, net))
    _write(args.report, report.to_json() + "\n")
    _write(args.front_csv, report.front_csv())
    _write(args.histogram_csv, report.histogram_csv())
    print(report.summary(), file=sys.stderr if "-" in (args.dot, args.jsonl) else sys.stdout)
    return _status_code(report)


def cmd_export(args) -> int:
    net, trg, report = _run(args)
    if trg is None:
        print(report.summary(), file=sys.stderr)
        return _status_code(report)
    text = to_dot(trg, net) if args.format == "dot" else canonical_dump(trg, net)
    _write(args.output, text)
    return _status_code(report)


def cmd_stats(args) -> int:
    _, _, report = _run(args)
    print(report.to_json() if args.json else report.summary())
    return _status_code(report)


def _csv_list(text: str, conv=str) -> list:
    return [conv(x) for x in text.split(",") if x]


def bench_rows(models, engines, ns, policies, T, H, caps, backend="process") -> list:
    rows = []
    for model in models:
        net, initial = corpus.load(model)
        for engine in engines:
            for n in (ns if engine != "seq" else [1]):
                for policy in policies:
                    _, rep = run_engine(net, initial, engine, n, policy, T, H, caps, backend=backend)
                    rows.append({
                        "model": net.name,
                        "architecture": "local" if rep.config.get("backend") != "process" else "multiprocess",
                        "compute_units": n,
                        "compute_model": {"seq": "sequential", "workers": "workers",
                                          "himapred": "hybrid-mapfold"}[engine],
                        "policy": policy,
                        "T": T if engine == "himapred" else "",
                        "H": H if engine == "himapred" else "",
                        "nodes": rep.nodes,
                        "edges": rep.edges,
                        "generated": rep.generated,
                        "max_partition_share": f"{rep.max_share:.6f}",
                        "exec_time_s": f"{rep.wall_time:.3f}",
                        "status": rep.status,
                    })
    return rows


def cmd_bench(args) -> int:
    rows = bench_rows(args.nets, _csv_list(args.engines), _csv_list(args.ns, int), _csv_list(args.policies),
                      args.T, args.H, _caps(args), args.backend)
    text = bench_csv(rows)
    _write(args.output or "-", text)
    return EXIT_OK


def cmd_verify(args) -> int:
    net, initial = corpus.load(args.net)
    dumps = []
    for engine in (args.engine_a, args.engine_b):
        trg, report = run_engine(net, initial, engine, args.n, args.policy, args.T, args.H, _caps(args),
                                 args.seed_order, args.backend, args.combine)
        if report.status != OK or trg is None:
            print(f"{engine}: {report.status} {report.reason}")
            return _status_code(report)
        dumps.append(canonical_dump(trg, net))
    if dumps[0] == dumps[1]:
        print("EQUIVALENT")
        return EXIT_OK
    a, b = dumps[0].splitlines(), dumps[1].splitlines()
    first = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b)))
    print(f"DIFFERENT: {len(a)} vs {len(b)} lines, first difference at line {first + 1}")
    return EXIT_DIFFERENT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tbtrg", description="Symbolic time reachability graphs of TB nets.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build the graph with one engine")
    p.add_argument("net", help="net file, or the name of a shipped model")
    _engine_flags(p)
    _cap_flags(p)
    p.add_argument("--dot", help="write Graphviz DOT here ('-' for stdout)")
    p.add_argument("--jsonl", help="write the canonical JSON-lines dump here")
    p.add_argument("--report", help="write the run report (JSON) here")
    p.add_argument("--front-csv", help="write the front-size series here")
    p.add_argument("--histogram-csv", help="write the per-partition node counts here")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("export", help="build and write the graph as DOT or JSON lines")
    p.add_argument("net")
    _engine_flags(p)
    _cap_flags(p)
    p.add_argument("--format", choices=("dot", "jsonl"), default="dot")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="build and print the run report")
    p.add_argument("net")
    _engine_flags(p)
    _cap_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="sweep engines, sizes and policies into a CSV table")
    p.add_argument("nets", nargs="+")
    p.add_argument("--engines", default="seq,workers,himapred")
    p.add_argument("--ns", default="1,2,4,8")
    p.add_argument("--policies", default="soft,discriminant")
    p.add_argument("--T", type=_number, default=200)
    p.add_argument("--H", type=_number, default=50)
    p.add_argument("--backend", choices=("process", "inline"), default="process")
    _cap_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify-equiv", help="run two engines and compare canonical dumps")
    p.add_argument("net")
    p.add_argument("--engine-a", choices=ENGINES, default="seq")
    p.add_argument("--engine-b", choices=ENGINES, default="workers")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--policy", choices=POLICIES, default=DISCRIMINANT)
    p.add_argument("--T", type=_number, default=200)
    p.add_argument("--H", type=_number, default=50)
    p.add_argument("--backend", choices=("process", "inline"), default="process")
    p.add_argument("--combine", action="store_true")
    _cap_flags(p)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NetParseError as exc:
        print(f"{args.net}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    except IntegrityError as exc:
        print(f"integrity fault: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

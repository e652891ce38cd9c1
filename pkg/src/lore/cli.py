"""Command-line front end: check, conflicts, simulate, serialize, emit-smt, emit-graph."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any

from lore.errors import (
    Fault,
    LoreError,
    NoSerialization,
    NotEncodable,
    ParseError,
    ProtocolViolation,
    VerifyError,
)
from lore.eval import Evaluator, initial_store
from lore.graph import build_graph
from lore.sim import (
    RandomSpec,
    Schedule,
    Trace,
    check_validity,
    final_summary,
    random_schedule,
    run_schedule,
    serialize_device,
)
from lore.syntax import load_file
from lore.syntax.checker import CheckedProgram
from lore.values import from_json
from lore.verify import BoundConfig, ConflictTable, check_program, universe
from lore.verify.smt import emit_all

EXIT_OK = 0
EXIT_PRESERVATION = 1
EXIT_INPUT = 2
EXIT_VIOLATION = 3
EXIT_NO_SERIALIZATION = 4
EXIT_FAULT = 5
EXIT_NOT_ENCODABLE = 6


def _bounds(args) -> BoundConfig:
    cfg = BoundConfig.load(args.bounds) if args.bounds else BoundConfig()
    changes: dict[str, Any] = {}
    for item in args.bound or []:
        key, _, raw = item.partition("=")
        value = json.loads(raw)
        changes[key] = tuple(value) if isinstance(value, list) else value
    return cfg.override(**changes) if changes else cfg


def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, indent=2, sort_keys=True) if args.format == "json" else text
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _conflict_lines(table: ConflictTable) -> list[str]:
    return [f"conflicts({a}) = {{{', '.join(sorted(bs))}}}" for a, bs in table.items()]


def cmd_check(args) -> int:
    p = load_file(args.program)
    report = check_program(p, _bounds(args))
    lines = [f"program {p.name}: bounded verification (results hold only within the recorded bounds)"]
    for v in report.verdicts:
        lines.append(f"  {v.obligation}: {v.status} ({v.cases} cases)")
        if v.witness is not None:
            w = v.witness
            lines.append(f"    witness: args {', '.join(w.to_json()['args_text'])}")
            lines.append(f"    from store {w.store.canonical()}")
            lines.append(f"    {w.reason}")
    lines += [f"  warning: {w}" for w in report.warnings]
    if report.preservation_ok:
        lines += _conflict_lines(report.conflicts)
    else:
        lines.append("preservation refuted; no conflict table computed")
    if args.emit_graph:
        with open(args.emit_graph, "w", encoding="utf-8") as fh:
            fh.write(build_graph(p).to_dot(p.name))
    _emit(args, report.to_json(), "\n".join(lines))
    return EXIT_OK if report.preservation_ok else EXIT_PRESERVATION


def cmd_conflicts(args) -> int:
    p = load_file(args.program)
    report = check_program(p, _bounds(args))
    if not report.preservation_ok:
        bad = ", ".join(v.obligation for v in report.preservation if not v.ok)
        print(f"preservation refuted: {bad}", file=sys.stderr)
        return EXIT_PRESERVATION
    _emit(args, {"schema": "lore-conflicts/1", "program": p.name, "conflicts": report.conflicts.to_json()},
          "\n".join(_conflict_lines(report.conflicts)))
    return EXIT_OK


def default_arguments(p: CheckedProgram, cfg: BoundConfig, limit: int = 12) -> dict[str, list[Any]]:
    """Argument pools for random runs: values enabled on the initial store when any are."""
    ev = Evaluator(p)
    s0 = initial_store(p)
    out = {}
    for name, a in sorted(p.executable.items()):
        pool = universe(p.expand(a.arg_type), p, cfg)
        enabled = [v for v in pool if ev.precondition(a, s0, v)]
        chosen = enabled or pool
        step = max(1, len(chosen) // limit)
        out[name] = chosen[::step][:limit]
    return out


def cmd_simulate(args) -> int:
    p = load_file(args.program)
    with open(args.program, encoding="utf-8") as fh:
        source = fh.read()
    if args.script:
        sched = Schedule.load(args.script)
        if args.no_coordination:
            sched = Schedule(sched.devices, sched.steps, False, sched.seed)
    else:
        spec = RandomSpec(default_arguments(p, _bounds(args)), args.devices, args.steps)
        sched = random_schedule(spec, args.seed, not args.no_coordination)
    if args.conflicts:
        with open(args.conflicts, encoding="utf-8") as fh:
            table = ConflictTable.from_json(json.load(fh)["conflicts"])
    elif sched.coordination:
        report = check_program(p, _bounds(args))
        if not report.preservation_ok:
            print("preservation refuted; refusing to simulate", file=sys.stderr)
            return EXIT_PRESERVATION
        table = report.conflicts
    else:
        table = ConflictTable(p.executable)
    trace = run_schedule(p, table, sched, source)
    validity = check_validity(trace)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fh.write(trace.dumps() + "\n")
        log_path = os.path.splitext(args.trace_out)[0] + ".log"
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write(trace.log())
    lines = trace.log_lines() + [""] + final_summary(trace)
    if validity.valid:
        lines.append(f"valid: all invariants hold in {validity.states} states")
    else:
        v = validity.first
        lines.append(f"INVALID: invariant {v.invariant} violated at step {v.step} on D{v.device}")
    if args.trace_out:
        lines.append(f"trace written to {args.trace_out}")
    payload = {
        "schema": "lore-sim/1",
        "program": p.name,
        "coordination": sched.coordination,
        "steps": len(trace.steps),
        "digest": trace.digests()[-1],
        "final": [
            {"device": d.id, "store": d.store.to_json(), "locks": sorted(d.locks), "alive": d.alive}
            for d in trace.final
        ],
        "validity": validity.to_json(),
        "trace": args.trace_out,
    }
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if validity.valid else EXIT_VIOLATION


def cmd_serialize(args) -> int:
    trace = Trace.load(args.trace)
    devices = [args.device] if args.device else list(range(1, len(trace.initial) + 1))
    results, lines, failed = [], [], False
    for d in devices:
        try:
            s = serialize_device(trace, d)
        except NoSerialization as exc:
            failed = True
            results.append({"device": d, "error": str(exc)})
            lines.append(f"D{d}: no serialization: {exc}")
            continue
        results.append(s.to_json())
        lines.append(f"D{d}: {len(s.steps)} interaction(s), replay store matches ({s.store.digest()})")
        lines += [f"  {k + 1}. {st}" for k, st in enumerate(s.steps)]
    _emit(args, {"schema": "lore-serialize/1", "results": results}, "\n".join(lines))
    return EXIT_NO_SERIALIZATION if failed else EXIT_OK


def cmd_emit_smt(args) -> int:
    p = load_file(args.program)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    for ob in emit_all(p):
        path = os.path.join(out_dir, ob.filename(p.name))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(ob.text)
        print(path)
    return EXIT_OK


def cmd_emit_graph(args) -> int:
    p = load_file(args.program)
    dot = build_graph(p).to_dot(p.name)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dot)
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lore", description="Verify and simulate local-first reactive programs.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def bounds_opts(sp):
        sp.add_argument("--bounds", help="JSON file with bound settings")
        sp.add_argument("--bound", action="append", metavar="KEY=JSON", help="override one bound, e.g. max_set_size=3")

    def fmt(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("check", help="verify preservation and confluence; print the conflict table")
    sp.add_argument("program")
    bounds_opts(sp)
    fmt(sp)
    sp.add_argument("--emit-graph", metavar="DOT", help="also write the data-flow graph")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("conflicts", help="print only the conflict table")
    sp.add_argument("program")
    bounds_opts(sp)
    fmt(sp)
    sp.add_argument("--out", help="write the table here instead of stdout")
    sp.set_defaults(func=cmd_conflicts)

    sp = sub.add_parser("simulate", help="run a scripted or random schedule on simulated devices")
    sp.add_argument("program")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--devices", type=int, default=3)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--script", help="schedule JSON file")
    sp.add_argument("--conflicts", help="conflict table JSON (as printed by `conflicts --format json`)")
    sp.add_argument("--no-coordination", action="store_true", help="ignore the conflict table")
    sp.add_argument("--trace-out", help="write the trace JSON (and a .log next to it)")
    bounds_opts(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("serialize", help="find serial orders reproducing device stores of a trace")
    sp.add_argument("trace")
    sp.add_argument("--device", type=int)
    fmt(sp)
    sp.set_defaults(func=cmd_serialize)

    sp = sub.add_parser("emit-smt", help="write one SMT-LIB file per obligation")
    sp.add_argument("program")
    sp.add_argument("--out", help="output directory (default: current directory)")
    sp.set_defaults(func=cmd_emit_smt)

    sp = sub.add_parser("emit-graph", help="print the data-flow graph in DOT")
    sp.add_argument("program")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_emit_graph)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NotEncodable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ENCODABLE
    except (Fault, ProtocolViolation) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except NoSerialization as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SERIALIZATION
    except (ParseError, VerifyError, LoreError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: run scenarios, query the oracle, compare
collection points, and fuzz the wire codec."""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from delayleader import messages
from delayleader.engine import (
    ScenarioError,
    count_messages,
    run_scenario,
    scenario_from_dict,
    trace_to_jsonl,
)
from delayleader.metrics import (
    build_report,
    compare_static_dynamic,
    emit_report,
    write_comparison_csv,
)
from delayleader.oracle import oracle_all_pairs
from delayleader.overlay import OverlayError, load_graph


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument("--mode", choices=("quiescence", "timed"), default=None,
                   help="override scenario mode")
    p.add_argument("--k", type=float, default=None,
                   help="waiting-window multiplier for timed mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayleader",
        description="Delay-closeness leader election over a simulated overlay")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a scenario script")
    p_run.add_argument("scenario")
    _add_common(p_run)

    p_oracle = sub.add_parser("oracle", help="ground-truth metrics for a graph")
    p_oracle.add_argument("graph")
    p_oracle.add_argument("--out", default="out")

    p_cmp = sub.add_parser("compare",
                           help="static vs elected collection point per step")
    p_cmp.add_argument("scenario")
    p_cmp.add_argument("--static", type=int, required=True,
                       help="node id of the fixed reference")
    _add_common(p_cmp)

    p_fuzz = sub.add_parser("fuzz-codec", help="round-trip random frames")
    p_fuzz.add_argument("--iters", type=int, default=10000)
    p_fuzz.add_argument("--seed", type=int, default=0)
    return parser


def _load_scenario(path: str, args) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kwargs = scenario_from_dict(doc, base_dir=os.path.dirname(path) or ".")
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.mode is not None:
        kwargs["mode"] = args.mode
    if args.k is not None:
        kwargs["k"] = args.k
    return kwargs


def _cmd_run(args) -> int:
    kwargs = _load_scenario(args.scenario, args)
    result = run_scenario(capture_trace=True, **kwargs)
    report = build_report(result.graph, leader=result.leader,
                          candidates=result.candidates,
                          counters=count_messages(result))
    files = emit_report(report, args.out, graph=result.graph,
                        trace_text=trace_to_jsonl(result.trace))
    print(f"leader={result.leader} elections={result.elections} "
          f"nodes={len(result.graph)} messages={sum(result.counters.values())}")
    for path in files:
        print(f"wrote {path}")
    return 0


def _cmd_oracle(args) -> int:
    g = load_graph(args.graph)
    res = oracle_all_pairs(g)
    report = build_report(g)
    files = emit_report(report, args.out, graph=g)
    print(f"ideal_leader={res.ideal_leader} "
          f"closeness={res.closeness[res.ideal_leader]}")
    for path in files:
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    kwargs = _load_scenario(args.scenario, args)
    result = run_scenario(**kwargs)
    rows = compare_static_dynamic(result.history, args.static)
    report = build_report(result.graph, leader=result.leader,
                          candidates=result.candidates,
                          counters=count_messages(result), comparison=rows)
    files = emit_report(report, args.out, graph=result.graph)
    files.append(write_comparison_csv(rows, args.out))
    for row in rows:
        marker = "<" if row["dynamic_strictly_better"] else "="
        print(f"n={row['nodes']:3d} dynamic_avg={row['dynamic_avg_us']:.1f} "
              f"{marker} static_avg={row['static_avg_us']:.1f}")
    for path in files:
        print(f"wrote {path}")
    return 0


def _random_frame(rng: random.Random, kind: str):
    node = rng.randint(0, 0xFFFF)
    word = lambda: rng.randint(0, 0xFFFFFFFF)
    if kind == "ELECTION":
        return messages.Election(node, word(), word())
    if kind == "JOIN":
        return messages.Join(node, word(), word())
    if kind == "REPLY_ID":
        return messages.ReplyId(node)
    if kind == "LEAVE":
        return messages.Leave(node)
    if kind == "ARRIVAL":
        return messages.Arrival(node)
    if kind == "DEPART":
        return messages.Depart(node)
    if kind == "REQUEST_ID":
        return messages.RequestId(node)
    if kind == "INFORM":
        return messages.Inform(node, word())
    tail = "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ:/_-")
                   for _ in range(rng.randint(0, 40)))
    return messages.ControlString(messages.VCONF_PREFIX + tail)


FUZZ_KINDS = ("ELECTION", "JOIN", "REPLY_ID", "LEAVE", "ARRIVAL", "DEPART",
              "REQUEST_ID", "INFORM", "CONTROL")


def _cmd_fuzz(args) -> int:
    rng = random.Random(args.seed)
    failures = 0
    for kind in FUZZ_KINDS:
        for _ in range(args.iters):
            msg = _random_frame(rng, kind)
            back = messages.decode(messages.encode(msg))
            if back != msg:
                failures += 1
                print(f"MISMATCH {kind}: {msg!r} -> {back!r}")
        print(f"{kind}: {args.iters} frames round-tripped")
    if failures:
        print(f"{failures} mismatches")
        return 1
    print("all frames round-tripped exactly")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "oracle":
            return _cmd_oracle(args)
        if args.cmd == "compare":
            return _cmd_compare(args)
        if args.cmd == "fuzz-codec":
            return _cmd_fuzz(args)
    except (ScenarioError, OverlayError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())

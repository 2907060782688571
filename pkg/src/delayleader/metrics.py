"""Evaluation metrics: per-node closeness/eccentricity tables, waiting time,
and the static-vs-dynamic collection-point comparison."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from delayleader.oracle import oracle_all_pairs
from delayleader.overlay import OverlayError, OverlayGraph, graph_to_dict
from delayleader.paths import single_source_delays

CSV_HEADER = ["node_id", "closeness_num", "closeness_den", "closeness",
              "eccentricity_us", "is_candidate", "is_leader"]


def waiting_time(delays: list[int]) -> int:
    """Collection wait: mean plus three population standard deviations,
    rounded up to whole microseconds. Exact when the variance is a perfect
    square."""
    if not delays:
        raise ValueError("waiting time needs at least one delay")
    n = len(delays)
    mu = Fraction(sum(delays), n)
    var = Fraction(sum(d * d for d in delays), n) - mu * mu
    rn, rd = isqrt(var.numerator), isqrt(var.denominator)
    if rn * rn == var.numerator and rd * rd == var.denominator:
        w = mu + 3 * Fraction(rn, rd)
        return -(-w.numerator // w.denominator)
    return math.ceil(float(mu) + 3.0 * math.sqrt(float(var)))


def _avg_max(g: OverlayGraph, target: int) -> tuple[Fraction, int]:
    dist = single_source_delays(g, target)
    others = [d for v, d in dist.items() if v != target]
    if any(d < 0 for d in others):
        raise OverlayError("graph is not connected")
    return Fraction(sum(others), len(others)), max(others)


def compare_static_dynamic(history: list[dict], static_ref: int) -> list[dict]:
    """One row per settled growth step: delays to the fixed node vs the
    elected leader of that step."""
    rows = []
    for step, snap in enumerate(history):
        g: OverlayGraph = snap["graph"]
        leader = snap["leader"]
        if static_ref not in g:
            raise OverlayError(f"static reference {static_ref} not in overlay")
        if leader is None or len(g) < 2:
            continue
        s_avg, s_max = _avg_max(g, static_ref)
        d_avg, d_max = _avg_max(g, leader)
        rows.append({
            "step": step,
            "nodes": len(g),
            "static_ref": static_ref,
            "leader": leader,
            "static_avg_us": float(s_avg),
            "static_max_us": s_max,
            "dynamic_avg_us": float(d_avg),
            "dynamic_max_us": d_max,
            "dynamic_strictly_better": d_avg < s_avg,
        })
    return rows


@dataclass
class MetricsReport:
    nodes: list[dict]
    leader: int | None
    leader_closeness: Fraction | None
    waiting_time_us: int | None
    message_counts: dict[str, int] = field(default_factory=dict)
    n_nodes: int = 0
    n_edges: int = 0
    comparison: list[dict] = field(default_factory=list)


def build_report(g: OverlayGraph, *, leader: int | None = None,
                 candidates: list[int] | None = None,
                 counters: dict[str, int] | None = None,
                 comparison: list[dict] | None = None) -> MetricsReport:
    """Ground-truth metrics table; `leader`/`candidates` default to the ideal."""
    res = oracle_all_pairs(g, current_leader=leader)
    if leader is None:
        leader = res.ideal_leader
    if candidates is None:
        best = max(res.closeness.values())
        candidates = [v for v in g.nodes() if res.closeness[v] == best]
    rows = []
    for v in g.nodes():
        c = res.closeness[v]
        rows.append({
            "node_id": v,
            "closeness_num": c.numerator,
            "closeness_den": c.denominator,
            "closeness": float(c),
            "eccentricity_us": res.eccentricity[v],
            "is_candidate": v in candidates,
            "is_leader": v == leader,
        })
    delays = [res.dist[y][leader] for y in g.nodes() if y != leader]
    return MetricsReport(
        nodes=rows,
        leader=leader,
        leader_closeness=res.closeness[leader],
        waiting_time_us=waiting_time(delays) if delays else None,
        message_counts=dict(counters or {}),
        n_nodes=len(g),
        n_edges=g.edge_count(),
        comparison=list(comparison or []),
    )


def emit_report(report: MetricsReport, out_dir, *, graph: OverlayGraph | None = None,
                trace_text: str | None = None) -> list[str]:
    """Write metrics.csv and summary.json (and trace.jsonl when given)."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    csv_path = os.path.join(out_dir, "metrics.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in report.nodes:
            writer.writerow([
                row["node_id"], row["closeness_num"], row["closeness_den"],
                f"{row['closeness']:.12g}", row["eccentricity_us"],
                int(row["is_candidate"]), int(row["is_leader"]),
            ])
    written.append(csv_path)

    summary = {
        "leader": report.leader,
        "leader_closeness": (
            [report.leader_closeness.numerator, report.leader_closeness.denominator]
            if report.leader_closeness is not None else None),
        "waiting_time_us": report.waiting_time_us,
        "message_counts": report.message_counts,
        "n_nodes": report.n_nodes,
        "n_edges": report.n_edges,
        "comparison": report.comparison,
    }
    if graph is not None:
        summary["graph"] = graph_to_dict(graph)
    json_path = os.path.join(out_dir, "summary.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(json_path)

    if trace_text is not None:
        trace_path = os.path.join(out_dir, "trace.jsonl")
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(trace_text)
        written.append(trace_path)
    return written


def write_comparison_csv(rows: list[dict], out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "compare.csv")
    header = ["step", "nodes", "static_ref", "leader", "static_avg_us",
              "static_max_us", "dynamic_avg_us", "dynamic_max_us",
              "dynamic_strictly_better"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[h] if h != "dynamic_strictly_better"
                             else int(row[h]) for h in header])
    return path

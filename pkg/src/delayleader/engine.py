"""Deterministic discrete-event simulator for the election protocol.

Messages travel one-way over each link and arrive after the link's delay;
simultaneous arrivals are ordered by sender id, then enqueue order, so a run
is a pure function of (graph, script, seed). In the default quiescence mode
the engine waits for the network to drain before moving an election to its
next stage and before executing the next scripted action. The timed mode
instead lets every node run on its own completion clock with a waiting
window of ``k * max(recorded path delay)``.
"""

from __future__ import annotations

import heapq
import json
import logging
import os
import random
from collections import deque
from dataclasses import dataclass
from typing import Any

from delayleader import membership
from delayleader import node as protocol
from delayleader.messages import (
    SUBSCRIBE,
    Arrival,
    ControlString,
    Depart,
    Election,
    Inform,
    Join,
    Leave,
    ReplyId,
    RequestId,
    encode,
    kind_name,
)
from delayleader.node import DcdtView, ElectionState
from delayleader.overlay import OverlayGraph, graph_from_dict, load_graph

log = logging.getLogger(__name__)

ACTION_RANK = -1
SCENARIO_OPS = ("start_election", "join", "leave", "fail_leader")


class ScenarioError(ValueError):
    """Malformed script or an action the current world cannot execute."""


class EngineError(RuntimeError):
    """The simulation reached a state the protocol rules out."""


class NodeRuntime:
    __slots__ = ("state", "dcdt", "seen_members", "selection_started",
                 "pending_informs")

    def __init__(self, state: ElectionState, dcdt: DcdtView):
        self.state = state
        self.dcdt = dcdt
        self.seen_members: set[tuple[str, int]] = set()
        self.selection_started = False
        self.pending_informs: list[tuple[Inform, int]] = []


@dataclass
class ScenarioResult:
    leader: int | None
    history: list[dict]
    counters: dict[str, int]
    trace: list[dict] | None
    graph: OverlayGraph
    runtimes: dict[int, NodeRuntime]
    candidates: list[int]
    elections: int
    mode: str

    def node_dumps(self) -> dict[int, dict]:
        return {v: protocol.debug_dump(rt.state, rt.dcdt)
                for v, rt in sorted(self.runtimes.items())}


class Engine:
    def __init__(self, graph: OverlayGraph, *, seed: int = 0,
                 mode: str = "quiescence", k: float = 3.0,
                 capture_trace: bool = False,
                 delay_range: tuple[int, int] = (1, 50)):
        if mode not in ("quiescence", "timed"):
            raise ScenarioError(f"unknown mode {mode!r}")
        if len(graph) == 0:
            raise ScenarioError("empty graph")
        if not graph.is_connected():
            raise ScenarioError("graph is not connected")
        self.graph = graph.copy()
        self.mode = mode
        self.k = k
        self.delay_range = tuple(delay_range)
        self.rng = random.Random(seed)
        self.runtimes: dict[int, NodeRuntime] = {}
        n = len(self.graph)
        for v in self.graph.nodes():
            self.runtimes[v] = NodeRuntime(
                ElectionState(v, n, self.graph.neighbors(v)), DcdtView(v))
        self.queue: list = []
        self.seq = 0
        self.now = 0
        self._inflight = 0
        self.counters: dict[str, int] = {}
        self.trace: list[dict] | None = [] if capture_trace else None
        self.leader_id: int | None = None
        self._leader_lost = False
        self.phase = "idle"
        self._pending_election = False
        self._settle_pending = False
        self._deferred: deque = deque()
        self._pending_joins: dict[int, membership.JoinNotice] = {}
        self._pending_leaves: dict[int, membership.LeaveNotice] = {}
        self.history: list[dict] = []
        self.elections = 0
        self.last_candidates: list[int] = []

    # -- plumbing ----------------------------------------------------------

    def _emit(self, **entry) -> None:
        if self.trace is not None:
            self.trace.append(entry)

    def _push(self, time: int, rank: int, kind: str, payload) -> None:
        heapq.heappush(self.queue, (time, rank, self.seq, kind, payload))
        self.seq += 1

    def send(self, frm: int, to: int, msg, *, delay: int | None = None) -> None:
        if delay is None:
            delay = self.graph.delay(frm, to)
        name = kind_name(msg)
        self.counters[name] = self.counters.get(name, 0) + 1
        self._push(self.now + delay, frm, "deliver", (frm, to, msg))
        self._inflight += 1

    def _send_all(self, frm: int, sends) -> None:
        for to, msg in sends:
            self.send(frm, to, msg)

    def detect_quiescence(self) -> bool:
        """True when nothing is in flight and no node holds unsent output."""
        return self._inflight == 0

    # -- main loop -----------------------------------------------------------

    def run(self, actions: list[dict]) -> None:
        for action in actions:
            self._push(int(action["at"]), ACTION_RANK, "action", action)
        while self.queue:
            time, rank, seq, kind, payload = heapq.heappop(self.queue)
            self.now = max(self.now, time)
            if kind == "action":
                self._deferred.append(payload)
            elif kind == "deliver":
                self._inflight -= 1
                self._deliver(*payload)
            elif kind == "timer":
                self._inflight -= 1
                self._fire_timer(payload)
            self._advance()

    def _advance(self) -> None:
        while self._inflight == 0:
            if self.phase == "record":
                self._enter_inform()
            elif self.phase == "inform":
                self._enter_subscribe()
            elif self.phase == "subscribe":
                self._conclude_election()
            elif self.phase == "timed_run":
                self._conclude_timed()
            elif self.phase == "member":
                self.phase = "idle"
                if self._pending_election:
                    self._pending_election = False
                    self._start_election_round()
            elif self._settle_pending:
                self._settle_pending = False
                self._snapshot()
            elif self._deferred:
                self._execute_action(self._deferred.popleft())
            else:
                break

    # -- election phases -------------------------------------------------------

    def _start_election_round(self) -> None:
        live = sorted(self.runtimes)
        if len(live) == 1:
            self.leader_id = live[0]
            self._leader_lost = False
            return
        hint = None if self._leader_lost else self.leader_id
        for v in live:
            rt = self.runtimes[v]
            rt.state = ElectionState(v, len(live), self.graph.neighbors(v), hint)
            rt.selection_started = False
            rt.pending_informs = []
        self.phase = "record" if self.mode == "quiescence" else "timed_run"
        self._emit(ev="phase", t=self.now, phase=self.phase)
        for v in live:
            self._send_all(v, protocol.start_election(self.runtimes[v].state))

    def _enter_inform(self) -> None:
        self.phase = "inform"
        self._emit(ev="phase", t=self.now, phase="inform")
        for v in sorted(self.runtimes):
            rt = self.runtimes[v]
            rt.selection_started = True
            self._send_all(v, protocol.begin_selection(rt.state, rt.dcdt))

    def _enter_subscribe(self) -> None:
        self.phase = "subscribe"
        self._emit(ev="phase", t=self.now, phase="subscribe")
        for v in sorted(self.runtimes):
            rt = self.runtimes[v]
            self._send_all(v, protocol.finalize_dcdt(rt.state, rt.dcdt))

    def _conclude_election(self) -> None:
        leaders = {rt.dcdt.leader for rt in self.runtimes.values()}
        if len(leaders) != 1:
            raise EngineError(f"nodes disagree on the leader: {sorted(leaders)}")
        self.leader_id = leaders.pop()
        self._finish_election()

    def _conclude_timed(self) -> None:
        votes: dict[int, int] = {}
        for rt in self.runtimes.values():
            votes[rt.dcdt.leader] = votes.get(rt.dcdt.leader, 0) + 1
        self.leader_id = min(votes, key=lambda v: (-votes[v], v))
        self._finish_election()

    def _finish_election(self) -> None:
        self._leader_lost = False
        self.elections += 1
        self.last_candidates = sorted(
            v for v, rt in self.runtimes.items() if rt.dcdt.is_candidate)
        self.phase = "idle"
        self._emit(ev="phase", t=self.now, phase="idle", leader=self.leader_id,
                   candidates=self.last_candidates)

    def _snapshot(self) -> None:
        self.history.append({
            "t": self.now,
            "leader": self.leader_id,
            "graph": self.graph.copy(),
            "nodes": len(self.graph),
            "edges": self.graph.edge_count(),
        })
        self._emit(ev="settle", t=self.now, leader=self.leader_id,
                   nodes=len(self.graph))

    # -- delivery ----------------------------------------------------------------

    def _deliver(self, frm: int, to: int, msg) -> None:
        rt = self.runtimes.get(to)
        if rt is None:
            self._emit(ev="drop", t=self.now, to=to, frm=frm,
                       kind=kind_name(msg), hex=encode(msg).hex())
            return
        sends: list = []
        if isinstance(msg, Election):
            sends = protocol.handle_election(rt.state, msg, frm)
            if (self.mode == "timed" and self.phase == "timed_run"
                    and not rt.selection_started and rt.state.recording_complete):
                sends = list(sends) + self._timed_enter_selection(rt)
        elif isinstance(msg, Inform):
            if self.mode == "timed" and not rt.selection_started:
                rt.pending_informs.append((msg, frm))
            else:
                sends = protocol.handle_inform(rt.state, rt.dcdt, msg, frm)
        elif isinstance(msg, ControlString):
            sends = protocol.handle_control(rt.state, rt.dcdt, msg, frm)
        elif isinstance(msg, Join):
            sends = self._deliver_join(rt, msg, frm)
        elif isinstance(msg, Leave):
            sends = self._deliver_leave(rt, msg, frm)
        elif isinstance(msg, Arrival):
            sends = self._deliver_member(rt, msg, frm, "arrival", +1)
        elif isinstance(msg, Depart):
            sends = self._deliver_member(rt, msg, frm, "depart", -1)
        # REQUEST_ID / REPLY_ID carry no routing behaviour beyond the trace.
        self._emit(ev="deliver", t=self.now, to=to, frm=frm,
                   kind=kind_name(msg), hex=encode(msg).hex(), sends=len(sends))
        self._send_all(to, sends)

    def _timed_enter_selection(self, rt: NodeRuntime) -> list:
        rt.selection_started = True
        sends = list(protocol.begin_selection(rt.state, rt.dcdt))
        for pending, gateway in rt.pending_informs:
            sends.extend(protocol.handle_inform(rt.state, rt.dcdt, pending, gateway))
        rt.pending_informs = []
        longest = max(
            (rec.best_delay for s, rec in rt.state.sources.items()
             if s != rt.state.self_id and rec.heard), default=1)
        window = max(1, int(self.k * longest))
        self._push(self.now + window, rt.state.self_id, "timer",
                   rt.state.self_id)
        self._inflight += 1
        return sends

    def _fire_timer(self, node_id: int) -> None:
        rt = self.runtimes.get(node_id)
        if rt is None:
            return
        sends = protocol.finalize_dcdt(rt.state, rt.dcdt)
        self._emit(ev="timer", t=self.now, node=node_id, sends=len(sends))
        self._send_all(node_id, sends)

    def _deliver_join(self, rt: NodeRuntime, msg: Join, frm: int) -> list:
        led = rt.state.links.get(frm)
        if led is None:
            log.warning("JOIN via unknown link %d->%d dropped", frm, rt.state.self_id)
            return []
        path = msg.path_delay_us + (msg.hop_delay_us + led.delay) // 2
        if rt.state.self_id == self.leader_id:
            self._leader_join_decision(rt, msg.node_id, path)
            return []
        nxt = rt.dcdt.toward
        if nxt == rt.state.self_id or nxt not in rt.state.links:
            log.warning("node %d cannot route JOIN toward leader", rt.state.self_id)
            return []
        return [(nxt, Join(msg.node_id, rt.state.links[nxt].delay, path))]

    def _deliver_leave(self, rt: NodeRuntime, msg: Leave, frm: int) -> list:
        if rt.state.self_id == self.leader_id:
            self._leader_leave_decision(rt, msg.node_id)
            return []
        nxt = rt.dcdt.toward
        if nxt == rt.state.self_id or nxt not in rt.state.links:
            log.warning("node %d cannot route LEAVE toward leader", rt.state.self_id)
            return []
        return [(nxt, msg)]

    def _deliver_member(self, rt: NodeRuntime, msg, frm: int, tag: str,
                        delta: int) -> list:
        key = (tag, msg.node_id)
        if key in rt.seen_members:
            return []
        rt.seen_members.add(key)
        rt.state.total_nodes += delta
        if tag == "depart":
            rt.dcdt.children.discard(msg.node_id)
            rt.dcdt.future_parents.discard(msg.node_id)
        return [(z, msg) for z in rt.state.live_neighbors() if z != frm]

    # -- leader decisions --------------------------------------------------------

    def _leader_join_decision(self, rt: NodeRuntime, new_id: int,
                              path_delay: int) -> None:
        notice = self._pending_joins.pop(new_id, None)
        if notice is None:
            log.warning("leader %d: JOIN for unknown node %d ignored",
                        rt.state.self_id, new_id)
            return
        notice.path_delay = path_delay
        decision = membership.leader_check_reelection(
            rt.state, self.leader_id, notice)
        self._emit(ev="decision", t=self.now, node=rt.state.self_id,
                   about=new_id, decision=decision.value)
        if decision is membership.Decision.REELECT:
            self._pending_election = True
        self._flood_member(rt, Arrival(new_id), "arrival", +1)

    def _leader_leave_decision(self, rt: NodeRuntime, gone_id: int) -> None:
        notice = self._pending_leaves.pop(gone_id, None)
        if notice is None:
            log.warning("leader %d: LEAVE for unknown node %d ignored",
                        rt.state.self_id, gone_id)
            return
        decision = membership.leader_check_reelection(
            rt.state, self.leader_id, notice)
        self._emit(ev="decision", t=self.now, node=rt.state.self_id,
                   about=gone_id, decision=decision.value)
        if decision is membership.Decision.REELECT:
            self._pending_election = True
        self._flood_member(rt, Depart(gone_id), "depart", -1)

    def _flood_member(self, rt: NodeRuntime, msg, tag: str, delta: int) -> None:
        key = (tag, msg.node_id)
        if key not in rt.seen_members:
            rt.seen_members.add(key)
            rt.state.total_nodes += delta
        self._send_all(rt.state.self_id,
                       [(z, msg) for z in rt.state.live_neighbors()])

    # -- scripted actions ----------------------------------------------------------

    def _execute_action(self, action: dict) -> None:
        op = action["op"]
        self.now = max(self.now, int(action["at"]))
        if op == "start_election":
            self._emit(ev="action", t=self.now, op=op)
            self._start_election_round()
        elif op == "join":
            self.bootstrap_join(attach_degree=int(action.get("attach", 1)))
        elif op == "leave":
            self.handle_departure(int(action["node"]))
        elif op == "fail_leader":
            self._fail_leader()
        else:
            raise ScenarioError(f"unknown op {op!r}")
        self._settle_pending = True

    def bootstrap_join(self, attach_degree: int = 1,
                       contact: int | None = None) -> int:
        """Admit one node: assign the lowest free id, link it, route its JOIN."""
        if self.leader_id is None:
            raise ScenarioError("join requires an elected leader")
        if attach_degree < 1:
            raise ScenarioError("attach degree must be >= 1")
        live = sorted(self.runtimes)
        new_id = membership.smallest_unused_id(live)
        if contact is None:
            contact = self.rng.choice(live)
        elif contact not in self.runtimes:
            raise ScenarioError(f"contact {contact} is not live")
        targets = sorted(self.rng.sample(live, min(attach_degree, len(live))))
        links = [(t, self.rng.randint(*self.delay_range)) for t in targets]

        self.graph.add_node(new_id)
        for peer, delay in links:
            self.graph.add_edge(new_id, peer, delay)
            self.runtimes[peer].state.add_link(new_id, delay)
        state = ElectionState(new_id, len(live) + 1, dict(links),
                              leader_hint=self.leader_id)
        dcdt = DcdtView(new_id)
        anchor = targets[0]
        dcdt.leader = self.leader_id
        dcdt.toward = anchor
        dcdt.future_parents = set(targets) - {anchor}
        rt = NodeRuntime(state, dcdt)
        rt.seen_members.add(("arrival", new_id))
        self.runtimes[new_id] = rt
        self._pending_joins[new_id] = membership.JoinNotice(new_id, links, 0)

        self._emit(ev="action", t=self.now, op="join", node=new_id,
                   contact=contact, links=[[p, d] for p, d in links])
        self.send(-1, contact, RequestId(0), delay=0)
        self.send(contact, new_id, ReplyId(new_id), delay=0)
        self._send_all(new_id, [
            (anchor, ControlString(SUBSCRIBE)),
            (anchor, Join(new_id, dict(links)[anchor], 0)),
        ])
        self.phase = "member"
        return new_id

    def handle_departure(self, leaving: int) -> None:
        """Civil departure: route the LEAVE, drop the node, re-parent orphans."""
        if leaving not in self.runtimes:
            raise ScenarioError(f"node {leaving} is not live")
        if leaving == self.leader_id:
            self._fail_leader()
            return
        if self.leader_id is None:
            raise ScenarioError("leave requires an elected leader")
        reduced = self.graph.copy()
        reduced.remove_node(leaving)
        if len(reduced) and not reduced.is_connected():
            raise ScenarioError(f"removing node {leaving} disconnects the overlay")
        degree = self.graph.degree(leaving)
        peer = next(iter(self.graph.neighbors(leaving))) if degree == 1 else None
        self._pending_leaves[leaving] = membership.LeaveNotice(leaving, degree, peer)
        self._emit(ev="action", t=self.now, op="leave", node=leaving,
                   degree=degree)
        rt = self.runtimes[leaving]
        nxt = rt.dcdt.toward
        if nxt != leaving and nxt in rt.state.links:
            self.send(leaving, nxt, Leave(leaving))
        self._remove_node(leaving)
        self.phase = "member"

    def _fail_leader(self) -> None:
        if self.leader_id is None:
            raise ScenarioError("no leader to fail")
        gone = self.leader_id
        reduced = self.graph.copy()
        reduced.remove_node(gone)
        if len(reduced) and not reduced.is_connected():
            raise ScenarioError(f"removing leader {gone} disconnects the overlay")
        former = sorted(self.graph.neighbors(gone))
        self._emit(ev="action", t=self.now, op="fail_leader", node=gone)
        self._remove_node(gone)
        self.leader_id = None
        self._leader_lost = True
        survivors = sorted(self.runtimes)
        if len(survivors) == 1:
            lone = self.runtimes[survivors[0]]
            lone.state.total_nodes = 1
            self.leader_id = survivors[0]
            self._leader_lost = False
            return
        initiator = min(former, key=lambda v: (-self.graph.degree(v), v))
        self._emit(ev="recovery", t=self.now, initiator=initiator)
        rt = self.runtimes[initiator]
        self._flood_member(rt, Depart(gone), "depart", -1)
        self.phase = "member"
        self._pending_election = True

    def _remove_node(self, gone: int) -> None:
        orphans = sorted(
            v for v, rt in self.runtimes.items()
            if v != gone and rt.dcdt.toward == gone)
        self.graph.remove_node(gone)
        del self.runtimes[gone]
        for v, rt in self.runtimes.items():
            rt.state.remove_link(gone)
            rt.dcdt.children.discard(gone)
            rt.dcdt.future_parents.discard(gone)
        for v in orphans:
            rt = self.runtimes[v]
            live = rt.state.live_neighbors()
            # stale dead marks may disqualify every remaining link; any
            # physical neighbour beats disconnection until the next election
            options = (sorted(rt.dcdt.future_parents & set(live)) or live
                       or sorted(rt.state.links))
            if not options:
                raise EngineError(f"node {v} has no parent candidates left")
            parent = options[0]
            rt.dcdt.toward = parent
            rt.dcdt.future_parents = set(live) - {parent}
            self._emit(ev="reparent", t=self.now, node=v, parent=parent)
            self.send(v, parent, ControlString(SUBSCRIBE))


# -- scenario front door --------------------------------------------------------


def run_scenario(graph: OverlayGraph, actions: list[dict], *, seed: int = 0,
                 mode: str = "quiescence", k: float = 3.0,
                 capture_trace: bool = False,
                 delay_range: tuple[int, int] = (1, 50)) -> ScenarioResult:
    """Execute a script against a topology and return the settled world."""
    for action in actions:
        if "at" not in action or "op" not in action:
            raise ScenarioError(f"action missing at/op: {action!r}")
        if action["op"] not in SCENARIO_OPS:
            raise ScenarioError(f"unknown op {action['op']!r}")
        if action["op"] == "leave" and "node" not in action:
            raise ScenarioError("leave needs a node")
    engine = Engine(graph, seed=seed, mode=mode, k=k,
                    capture_trace=capture_trace, delay_range=delay_range)
    engine.run(sorted(actions, key=lambda a: int(a["at"])))
    return ScenarioResult(
        leader=engine.leader_id,
        history=engine.history,
        counters=dict(engine.counters),
        trace=engine.trace,
        graph=engine.graph,
        runtimes=engine.runtimes,
        candidates=engine.last_candidates,
        elections=engine.elections,
        mode=engine.mode,
    )


def count_messages(result: ScenarioResult) -> dict[str, int]:
    """Per-kind transmission counts plus the n*|E| flooding reference."""
    counts = dict(result.counters)
    counts["reference_n_times_edges"] = len(result.graph) * result.graph.edge_count()
    return counts


def scenario_from_dict(doc: dict, base_dir: str = ".") -> dict[str, Any]:
    """Decode a scenario document into run_scenario keyword arguments."""
    if "graph" not in doc or "actions" not in doc:
        raise ScenarioError("scenario needs 'graph' and 'actions'")
    graph_spec = doc["graph"]
    if isinstance(graph_spec, str):
        graph = load_graph(os.path.join(base_dir, graph_spec))
    else:
        graph = graph_from_dict(graph_spec)
    return {
        "graph": graph,
        "actions": list(doc["actions"]),
        "seed": int(doc.get("seed", 0)),
        "mode": doc.get("mode", "quiescence"),
        "k": float(doc.get("k", 3.0)),
        "delay_range": tuple(doc.get("delay_range", (1, 50))),
    }


def trace_to_jsonl(trace: list[dict]) -> str:
    return "".join(
        json.dumps(entry, sort_keys=True, separators=(",", ":")) + "\n"
        for entry in trace)

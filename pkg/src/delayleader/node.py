"""Per-node election state machine.

The recording pass floods every node's ELECTION message and records, per neighbour link:

* ``best_delay`` per source: the fastest path delay from that source here;
* ``in_weight``: how many sources' fastest copies arrive through the neighbour;
* ``out_weight``: how many sources this node relays toward the neighbour on
  their fastest route;
* ``shared_delay_here`` / ``shared_delay_peer``: delay totals for sources that
  reach both ends of the link well without crossing it;
* a ``dead`` mark when the direct link is slower than some detour.

The selection pass turns those ledgers into a local superiority test per link. A node
that beats every live neighbour announces its exact closeness centrality with
an INFORM flood; everyone adopts the best announcement and the adoption
directions form the collection/distribution tree rooted at the winner.
"""

from __future__ import annotations

import logging
from enum import Enum
from fractions import Fraction

from delayleader.messages import (
    SUBSCRIBE,
    UNSUBSCRIBE,
    ControlString,
    Election,
    Inform,
    centrality_to_raw,
    raw_to_centrality,
)

log = logging.getLogger(__name__)

INF = float("inf")


class ProtocolError(RuntimeError):
    """Raised when an operation runs against state it cannot be computed from."""


class Side(Enum):
    """Position of a source relative to one link, seen from the near end."""

    BEHIND_SELF = "behind_self"   # reaches the peer fastest through us
    BEHIND_PEER = "behind_peer"   # reaches us fastest through the peer
    SHARED = "shared"             # reaches both ends well on its own


class SourceRecord:
    """What one node knows about a single ELECTION source."""

    __slots__ = ("heard", "best_delay", "gateways", "received_via",
                 "forwarded_to", "delay_via")

    def __init__(self):
        self.heard = False
        self.best_delay = INF
        self.gateways: list[int] = []       # neighbours whose copies we accepted
        self.received_via: set[int] = set()
        self.forwarded_to: set[int] = set()
        self.delay_via: dict[int, float] = {}  # best known source->neighbour delay


class LinkLedger:
    """Branch-weight bookkeeping for one neighbour link."""

    __slots__ = ("delay", "in_weight", "out_weight", "shared_delay_here",
                 "shared_delay_peer", "dead")

    def __init__(self, delay: int):
        self.delay = delay
        self.in_weight = 0
        self.out_weight = 0
        self.shared_delay_here = 0
        self.shared_delay_peer = 0
        self.dead = False


class ElectionState:
    """One node's live election bookkeeping."""

    def __init__(self, self_id: int, total_nodes: int,
                 neighbor_delays: dict[int, int], leader_hint: int | None = None):
        self.self_id = self_id
        self.total_nodes = total_nodes
        self.leader_hint = leader_hint
        self.links: dict[int, LinkLedger] = {}
        for peer, delay in neighbor_delays.items():
            self.links[peer] = LinkLedger(delay)
        self.sources: dict[int, SourceRecord] = {}
        self.heard_count = 0
        me = SourceRecord()
        me.heard = True
        me.best_delay = 0
        self.sources[self_id] = me

    def neighbors(self) -> list[int]:
        return sorted(self.links)

    def live_neighbors(self) -> list[int]:
        return sorted(y for y, led in self.links.items() if not led.dead)

    @property
    def recording_complete(self) -> bool:
        return self.heard_count == self.total_nodes - 1

    def add_link(self, peer: int, delay: int) -> LinkLedger:
        led = LinkLedger(delay)
        self.links[peer] = led
        return led

    def remove_link(self, peer: int) -> None:
        self.links.pop(peer, None)


class DcdtView:
    """One node's view of the collection/distribution tree."""

    __slots__ = ("leader", "best_centrality", "toward", "future_parents",
                 "children", "seen_candidates", "is_candidate")

    def __init__(self, self_id: int):
        self.children: set[int] = set()
        self.reset(self_id)

    def reset(self, self_id: int) -> None:
        self.leader = self_id
        self.best_centrality = Fraction(0)
        self.toward = self_id
        self.future_parents: set[int] = set()
        self.children = set()
        self.seen_candidates: set[int] = set()
        self.is_candidate = False


# -- phase 1 helpers --------------------------------------------------------

def _accept(rec: SourceRecord, led: LinkLedger, gateway: int,
            wire_path_delay: int) -> None:
    # adjust the receive count for this gateway
    if gateway not in rec.received_via:
        rec.received_via.add(gateway)
        rec.gateways.append(gateway)
        led.in_weight += 1
    rec.delay_via[gateway] = wire_path_delay


def _adjust_send(rec: SourceRecord, led: LinkLedger, gateway: int) -> None:
    # take back a relay that turned out to be unnecessary
    if gateway in rec.forwarded_to:
        rec.forwarded_to.discard(gateway)
        led.out_weight -= 1


def _reset_direction(state: ElectionState, rec: SourceRecord) -> None:
    # a strictly faster copy obsoletes every previously accepted gateway
    for y in rec.gateways:
        state.links[y].in_weight -= 1
        rec.received_via.discard(y)
    rec.gateways.clear()


def _forward(state: ElectionState, source: int, rec: SourceRecord,
             exclude: int) -> list[tuple[int, Election]]:
    sends = []
    base = rec.best_delay
    for z in state.neighbors():
        if z == exclude:
            continue
        # dead links still carry recording traffic; both ends need the late
        # copies to take back forwards they counted toward each other
        led = state.links[z]
        offer = base + led.delay
        if rec.delay_via.get(z, INF) > offer and z not in rec.forwarded_to:
            rec.forwarded_to.add(z)
            led.out_weight += 1
        if z in rec.forwarded_to:
            rec.delay_via[z] = offer
            sends.append((z, Election(source, led.delay, base)))
    return sends


def _mark_dead(state: ElectionState, peer: int) -> None:
    led = state.links[peer]
    if not led.dead:
        led.dead = True
        log.debug("node %d: link to %d marked dead", state.self_id, peer)


# -- phase 1 ----------------------------------------------------------------

def start_election(state: ElectionState) -> list[tuple[int, Election]]:
    """Broadcast this node's own ELECTION message to every neighbour."""
    rec = state.sources[state.self_id]
    sends = []
    for z in state.neighbors():
        led = state.links[z]
        rec.forwarded_to.add(z)
        led.out_weight += 1
        rec.delay_via[z] = led.delay
        sends.append((z, Election(state.self_id, led.delay, 0)))
    return sends


def handle_election(state: ElectionState, msg: Election,
                    gateway: int) -> list[tuple[int, Election]]:
    """Process one ELECTION copy arriving via `gateway`; returns relays to send."""
    led = state.links.get(gateway)
    if led is None:
        log.warning("node %d: ELECTION via unknown neighbour %d dropped",
                    state.self_id, gateway)
        return []
    source = msg.node_id
    rec = state.sources.get(source)
    if rec is None:
        rec = SourceRecord()
        state.sources[source] = rec

    path_to_gateway = msg.path_delay_us
    # halves of a symmetric link agree, so the mean is the link delay itself
    arrival_delay = path_to_gateway + (msg.hop_delay_us + led.delay) // 2

    if not rec.heard:
        # very first copy from this source
        rec.heard = True
        state.heard_count += 1
        rec.best_delay = arrival_delay
        _accept(rec, led, gateway, path_to_gateway)
        return _forward(state, source, rec, gateway)

    if arrival_delay < rec.best_delay:
        # strictly faster route found; repoint everything at it
        _reset_direction(state, rec)
        rec.best_delay = arrival_delay
        _accept(rec, led, gateway, path_to_gateway)
        _adjust_send(rec, led, gateway)
        return _forward(state, source, rec, gateway)

    if arrival_delay == rec.best_delay:
        # equally fast route: count the extra gateway, stop relaying toward it
        _accept(rec, led, gateway, path_to_gateway)
        _adjust_send(rec, led, gateway)
        return []

    if source == state.self_id:
        # own message came back; a shorter detour means the direct link is slow
        if path_to_gateway < led.delay:
            rec.delay_via[gateway] = path_to_gateway
            _adjust_send(rec, led, gateway)
            _mark_dead(state, gateway)
        return []

    if source == gateway:
        # the neighbour's own message over a direct link we already beat
        if rec.best_delay < led.delay:
            _adjust_send(rec, led, gateway)
            _mark_dead(state, gateway)
        return []

    if rec.best_delay + led.delay > path_to_gateway:
        # both link ends reach this source well on their own
        rec.delay_via[gateway] = path_to_gateway
        led.shared_delay_here += rec.best_delay
        led.shared_delay_peer += path_to_gateway
        _adjust_send(rec, led, gateway)
        return []

    return []


# -- phase 2 ----------------------------------------------------------------

def classify_source(state: ElectionState, source: int, neighbor: int) -> Side:
    """Which side of the link to `neighbor` the source sits on, from records."""
    rec = state.sources.get(source)
    if rec is None or not rec.heard:
        raise ProtocolError(f"node {state.self_id}: no record for source {source}")
    led = state.links[neighbor]
    via = rec.delay_via.get(neighbor, INF)
    if via >= rec.best_delay + led.delay:
        return Side.BEHIND_SELF
    if rec.best_delay >= via + led.delay:
        return Side.BEHIND_PEER
    return Side.SHARED


def superiority(state: ElectionState, neighbor: int) -> tuple[Fraction, bool]:
    """Exact advantage over one live neighbour and whether this node wins.

    Positive advantage means this node sits closer to the rest of the network
    than the neighbour does. Exact ties go to the current leader, then to the
    lower node id.
    """
    led = state.links[neighbor]
    if led.dead:
        raise ProtocolError(
            f"link {state.self_id}-{neighbor} is dead; superiority undefined")
    if led.delay > 0:
        delta = Fraction(
            (led.out_weight - led.in_weight) * led.delay
            - (led.shared_delay_here - led.shared_delay_peer),
            led.delay,
        )
    else:
        delta = Fraction(led.shared_delay_peer - led.shared_delay_here)
    if delta > 0:
        wins = True
    elif delta < 0:
        wins = False
    else:
        me, leader = state.self_id, state.leader_hint
        wins = not ((neighbor < me and me != leader) or neighbor == leader)
    return delta, wins


def decide_candidacy(state: ElectionState) -> bool:
    """True when this node beats every live neighbour."""
    return all(superiority(state, y)[1] for y in state.live_neighbors())


def closeness_value(state: ElectionState) -> Fraction:
    """Exact closeness centrality from the recorded path delays."""
    total = 0
    for source, rec in state.sources.items():
        if source == state.self_id:
            continue
        if not rec.heard:
            raise ProtocolError(
                f"node {state.self_id}: source {source} never heard")
        total += rec.best_delay
    if state.heard_count != state.total_nodes - 1:
        raise ProtocolError(
            f"node {state.self_id}: heard {state.heard_count} of "
            f"{state.total_nodes - 1} sources")
    if total == 0:
        raise ProtocolError("total delay is zero; centrality undefined")
    return Fraction(state.total_nodes - 1, total)


def begin_selection(state: ElectionState, dcdt: DcdtView) -> list[tuple[int, Inform]]:
    """Decide candidacy; candidates announce their centrality to all neighbours."""
    dcdt.reset(state.self_id)
    candidate = decide_candidacy(state)
    dcdt.is_candidate = candidate
    sends = []
    if candidate and state.total_nodes >= 2:
        value = closeness_value(state)
        dcdt.best_centrality = value
        dcdt.seen_candidates.add(state.self_id)
        msg = Inform(state.self_id, centrality_to_raw(value), value)
        sends = [(z, msg) for z in state.live_neighbors()]
    return sends


def handle_inform(state: ElectionState, dcdt: DcdtView, msg: Inform,
                  gateway: int) -> list[tuple[int, Inform]]:
    """Adopt better announcements; relay each candidate's first copy onward."""
    if gateway not in state.links:
        log.warning("node %d: INFORM via unknown neighbour %d dropped",
                    state.self_id, gateway)
        return []
    value = (msg.centrality_exact if msg.centrality_exact is not None
             else raw_to_centrality(msg.centrality_raw))
    if value > dcdt.best_centrality or (
            value == dcdt.best_centrality and dcdt.leader > msg.node_id):
        dcdt.leader = msg.node_id
        dcdt.best_centrality = value
        dcdt.toward = gateway
    sends = []
    if msg.node_id not in dcdt.seen_candidates:
        dcdt.seen_candidates.add(msg.node_id)
        sends = [(z, msg) for z in state.live_neighbors() if z != gateway]
    return sends


def finalize_dcdt(state: ElectionState, dcdt: DcdtView) -> list[tuple[int, ControlString]]:
    """Subscribe toward the leader, release every other live neighbour."""
    live = set(state.live_neighbors())
    dcdt.future_parents = live - {dcdt.toward}
    sends = []
    if dcdt.toward != state.self_id:
        sends.append((dcdt.toward, ControlString(SUBSCRIBE)))
    for z in sorted(dcdt.future_parents):
        sends.append((z, ControlString(UNSUBSCRIBE)))
    return sends


def handle_control(state: ElectionState, dcdt: DcdtView, msg: ControlString,
                   gateway: int) -> list:
    if gateway not in state.links:
        log.warning("node %d: control %r from non-neighbour %d dropped",
                    state.self_id, msg.text, gateway)
        return []
    if msg.text == SUBSCRIBE:
        dcdt.children.add(gateway)
    elif msg.text == UNSUBSCRIBE:
        dcdt.children.discard(gateway)
    else:
        log.warning("node %d: unknown control %r", state.self_id, msg.text)
    return []


# -- introspection -----------------------------------------------------------

def debug_dump(state: ElectionState, dcdt: DcdtView) -> dict:
    """JSON-able snapshot of the node's records for tests and traces."""
    def _num(v):
        return None if v == INF else v

    return {
        "node": state.self_id,
        "n": state.total_nodes,
        "heard_count": state.heard_count,
        "best_delay": {
            str(s): _num(rec.best_delay)
            for s, rec in sorted(state.sources.items()) if rec.heard
        },
        "links": {
            str(y): {
                "delay": led.delay,
                "in_weight": led.in_weight,
                "out_weight": led.out_weight,
                "shared_delay_here": led.shared_delay_here,
                "shared_delay_peer": led.shared_delay_peer,
                "dead": led.dead,
            }
            for y, led in sorted(state.links.items())
        },
        "tree": {
            "leader": dcdt.leader,
            "centrality": [dcdt.best_centrality.numerator,
                           dcdt.best_centrality.denominator],
            "toward": dcdt.toward,
            "future_parents": sorted(dcdt.future_parents),
            "children": sorted(dcdt.children),
            "is_candidate": dcdt.is_candidate,
        },
    }

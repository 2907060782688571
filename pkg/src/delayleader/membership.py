"""Dynamic-membership logic kept at the leader.

The leader answers one question per join/leave notice: can it stay leader
without a vote, or must it call an election? Its branch ledgers only witness
superiority over direct neighbours, and a topology change elsewhere can raise
a non-adjacent challenger no local test can see, so the no-vote answer is
reserved for the one provably safe case: a newcomer whose single link lands
on the leader itself. Then every node's distance to the newcomer is its
distance to the leader plus the new link, which keeps the leader's lead
intact; the ledgers absorb the newcomer exactly and the membership change is
merely broadcast. Every other join, and every departure, re-elects.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from delayleader.node import ElectionState, superiority

log = logging.getLogger(__name__)


class Decision(Enum):
    REELECT = "reelect"
    BROADCAST_ONLY = "broadcast_only"


@dataclass
class JoinNotice:
    node_id: int
    attachments: list[tuple[int, int]]  # (peer, link delay)
    path_delay: int                     # accumulated delay of the notice route


@dataclass
class LeaveNotice:
    node_id: int
    degree: int                         # graph degree just before leaving
    peer: int | None                    # the single neighbour when degree == 1


def smallest_unused_id(live_ids) -> int:
    used = set(live_ids)
    candidate = 0
    while candidate in used:
        candidate += 1
    return candidate


def _absorb_leader_pendant(state: ElectionState, notice: JoinNotice) -> None:
    """Fold a newcomer hanging directly off the leader into the ledgers.

    The newcomer is the only node behind its own link; everyone previously
    known now reaches it through us, so every other live branch gains one
    outbound unit. Shared-band totals are untouched.
    """
    peer, link_delay = notice.attachments[0]
    led = state.links.get(notice.node_id)
    if led is None:
        led = state.add_link(notice.node_id, link_delay)
    led.in_weight = 1
    led.out_weight = state.total_nodes
    led.shared_delay_here = 0
    led.shared_delay_peer = 0
    led.dead = False
    for y, other in state.links.items():
        if y != notice.node_id and not other.dead:
            other.out_weight += 1


def leader_check_reelection(state: ElectionState, leader_id: int,
                            notice: JoinNotice | LeaveNotice) -> Decision:
    """Fold a membership notice into the leader's view and decide."""
    if (isinstance(notice, JoinNotice) and len(notice.attachments) == 1
            and notice.attachments[0][0] == leader_id):
        _absorb_leader_pendant(state, notice)
        if all(superiority(state, y)[0] > 0 for y in state.live_neighbors()):
            return Decision.BROADCAST_ONLY
    log.debug("leader %d: notice %r forces an election", leader_id, notice)
    return Decision.REELECT

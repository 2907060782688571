"""Protocol messages and their byte codec.

Frame layout: a 1-byte kind tag followed by a fixed-size body (big-endian,
unsigned). Election and join frames carry the node id (2 bytes), the last
link delay `hop_delay_us` (4 bytes) and the accumulated path delay
`path_delay_us` (4 bytes). Membership frames carry only the node id. Inform
frames carry the node id and the sender's centrality as unsigned Q16.16 in
per-millisecond units. Control strings are length-prefixed ASCII and must
start with the "VCONF" prefix.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction

VCONF_PREFIX = "VCONF"
SUBSCRIBE = "VCONF:SUBS"
UNSUBSCRIBE = "VCONF:USUBS"

# Q16.16 per-millisecond: raw = floor(centrality_per_us * 1000 * 65536)
CENTRALITY_SCALE = 1000 * 65536

TAG_ELECTION = 0x01
TAG_JOIN = 0x02
TAG_REPLY_ID = 0x03
TAG_LEAVE = 0x04
TAG_ARRIVAL = 0x05
TAG_DEPART = 0x06
TAG_INFORM = 0x07
TAG_REQUEST_ID = 0x08
TAG_CONTROL = 0x09


class CodecError(ValueError):
    """Base for framing problems; carries the byte offset of the fault."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"offset {offset}: {reason}")
        self.offset = offset


class EncodeError(CodecError):
    pass


class DecodeError(CodecError):
    pass


@dataclass(frozen=True)
class Election:
    node_id: int
    hop_delay_us: int
    path_delay_us: int


@dataclass(frozen=True)
class Join:
    node_id: int
    hop_delay_us: int
    path_delay_us: int


@dataclass(frozen=True)
class ReplyId:
    node_id: int


@dataclass(frozen=True)
class Leave:
    node_id: int


@dataclass(frozen=True)
class Arrival:
    node_id: int


@dataclass(frozen=True)
class Depart:
    node_id: int


@dataclass(frozen=True)
class RequestId:
    node_id: int


@dataclass(frozen=True)
class Inform:
    node_id: int
    centrality_raw: int
    # Exact value used by the election logic; never on the wire, never compared.
    centrality_exact: Fraction | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ControlString:
    text: str


ProtocolMessage = (Election | Join | ReplyId | Leave | Arrival | Depart
                   | Inform | RequestId | ControlString)

_ID_TAGS = {
    ReplyId: TAG_REPLY_ID,
    Leave: TAG_LEAVE,
    Arrival: TAG_ARRIVAL,
    Depart: TAG_DEPART,
    RequestId: TAG_REQUEST_ID,
}
_ID_TYPES = {tag: cls for cls, tag in _ID_TAGS.items()}


def kind_name(m: ProtocolMessage) -> str:
    names = {
        Election: "ELECTION", Join: "JOIN", ReplyId: "REPLY_ID", Leave: "LEAVE",
        Arrival: "ARRIVAL", Depart: "DEPART", Inform: "INFORM",
        RequestId: "REQUEST_ID", ControlString: "CONTROL",
    }
    return names[type(m)]


def centrality_to_raw(value: Fraction) -> int:
    """Quantize an exact per-microsecond centrality for the 4-byte wire field."""
    raw = int(value * CENTRALITY_SCALE)  # floor for nonnegative values
    if value < 0:
        raise EncodeError(3, "centrality is negative")
    if raw > 0xFFFFFFFF:
        raise EncodeError(3, "centrality exceeds the 4-byte field")
    return raw


def raw_to_centrality(raw: int) -> Fraction:
    return Fraction(raw, CENTRALITY_SCALE)


def _check(value: int, width_bits: int, offset: int, name: str) -> int:
    if not isinstance(value, int) or value < 0 or value >= (1 << width_bits):
        raise EncodeError(offset, f"{name} {value!r} does not fit {width_bits} bits")
    return value


def encode(m: ProtocolMessage) -> bytes:
    if isinstance(m, (Election, Join)):
        tag = TAG_ELECTION if isinstance(m, Election) else TAG_JOIN
        _check(m.node_id, 16, 1, "node_id")
        _check(m.hop_delay_us, 32, 3, "hop_delay_us")
        _check(m.path_delay_us, 32, 7, "path_delay_us")
        return bytes([tag]) + struct.pack(">HII", m.node_id, m.hop_delay_us,
                                          m.path_delay_us)
    if type(m) in _ID_TAGS:
        _check(m.node_id, 16, 1, "node_id")
        return bytes([_ID_TAGS[type(m)]]) + struct.pack(">H", m.node_id)
    if isinstance(m, Inform):
        _check(m.node_id, 16, 1, "node_id")
        _check(m.centrality_raw, 32, 3, "centrality")
        return bytes([TAG_INFORM]) + struct.pack(">HI", m.node_id, m.centrality_raw)
    if isinstance(m, ControlString):
        if not m.text.startswith(VCONF_PREFIX):
            raise EncodeError(2, f"control text lacks {VCONF_PREFIX!r} prefix")
        try:
            data = m.text.encode("ascii")
        except UnicodeEncodeError as exc:
            raise EncodeError(2, "control text is not ASCII") from exc
        if len(data) > 0xFF:
            raise EncodeError(1, "control text longer than 255 bytes")
        return bytes([TAG_CONTROL, len(data)]) + data
    raise EncodeError(0, f"unknown message {m!r}")


def _need(buf: bytes, total: int) -> None:
    if len(buf) < total:
        raise DecodeError(len(buf), f"truncated frame, need {total} bytes")


def decode(buf: bytes) -> ProtocolMessage:
    if not buf:
        raise DecodeError(0, "empty frame")
    tag = buf[0]
    if tag in (TAG_ELECTION, TAG_JOIN):
        _need(buf, 11)
        if len(buf) != 11:
            raise DecodeError(11, "trailing bytes after frame")
        node_id, hop, path = struct.unpack(">HII", buf[1:11])
        cls = Election if tag == TAG_ELECTION else Join
        return cls(node_id, hop, path)
    if tag in _ID_TYPES:
        _need(buf, 3)
        if len(buf) != 3:
            raise DecodeError(3, "trailing bytes after frame")
        return _ID_TYPES[tag](struct.unpack(">H", buf[1:3])[0])
    if tag == TAG_INFORM:
        _need(buf, 7)
        if len(buf) != 7:
            raise DecodeError(7, "trailing bytes after frame")
        node_id, raw = struct.unpack(">HI", buf[1:7])
        return Inform(node_id, raw)
    if tag == TAG_CONTROL:
        _need(buf, 2)
        length = buf[1]
        _need(buf, 2 + length)
        if len(buf) != 2 + length:
            raise DecodeError(2 + length, "trailing bytes after frame")
        try:
            text = buf[2:2 + length].decode("ascii")
        except UnicodeDecodeError as exc:
            raise DecodeError(2, "control text is not ASCII") from exc
        if not text.startswith(VCONF_PREFIX):
            raise DecodeError(2, f"control text lacks {VCONF_PREFIX!r} prefix")
        return ControlString(text)
    raise DecodeError(0, f"unknown kind tag 0x{tag:02x}")

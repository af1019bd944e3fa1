"""Wire frames for the synchronization exchange.

Layout (network byte order)::

    opcode(1) | nonce(4) | body_len(4) | body

Bodies:
    REQ_HEADER_LIST   config_hash(8) | client_rid(1)
    HEADER_LIST       count(2) | count x header(6) | config_hash(8)
    REQ_HEADER        header(6)
    PAYLOAD           header(6) | priority(1) | found(1) | payload
    COMM_END, ACK     empty
    CONFIG_MISMATCH   config_hash(8) of the sender
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from mocha.core.header import HEADER_SIZE, MsgHeader, decode_header, decode_headers, encode_header, encode_headers
from mocha.core.store import Message
from mocha.errors import FrameError, HeaderError

PREFIX = struct.Struct("!BII")
PREFIX_SIZE = PREFIX.size
HASH_SIZE = 8
MAX_BODY = 16 * 1024 * 1024

FOUND = 0x01
NOT_FOUND = 0x00


class Op(enum.IntEnum):
    REQ_HEADER_LIST = 0x01
    HEADER_LIST = 0x02
    REQ_HEADER = 0x03
    PAYLOAD = 0x04
    COMM_END = 0x05
    ACK = 0x06
    CONFIG_MISMATCH = 0x07


@dataclass(frozen=True)
class WireFrame:
    op: Op
    nonce: int
    body: bytes = b""

    def encode(self) -> bytes:
        return PREFIX.pack(self.op, self.nonce, len(self.body)) + self.body

    def __len__(self) -> int:
        return PREFIX_SIZE + len(self.body)


def decode_prefix(prefix: bytes) -> tuple[Op, int, int]:
    if len(prefix) != PREFIX_SIZE:
        raise FrameError(f"frame prefix must be {PREFIX_SIZE} bytes, got {len(prefix)}")
    op, nonce, body_len = PREFIX.unpack(prefix)
    try:
        op = Op(op)
    except ValueError:
        raise FrameError(f"unknown opcode 0x{op:02x}") from None
    if body_len > MAX_BODY:
        raise FrameError(f"body length {body_len} exceeds limit {MAX_BODY}")
    return op, nonce, body_len


def decode_frame(data: bytes) -> WireFrame:
    op, nonce, body_len = decode_prefix(data[:PREFIX_SIZE])
    body = data[PREFIX_SIZE:]
    if len(body) != body_len:
        raise FrameError(f"declared body length {body_len}, got {len(body)} bytes")
    return WireFrame(op, nonce, bytes(body))


# -- body builders / parsers -------------------------------------------------


def req_header_list(nonce: int, config_hash: bytes, client_rid: int) -> WireFrame:
    return WireFrame(Op.REQ_HEADER_LIST, nonce, config_hash + bytes([client_rid]))


def parse_req_header_list(frame: WireFrame) -> tuple[bytes, int]:
    if len(frame.body) != HASH_SIZE + 1:
        raise FrameError(f"REQ_HEADER_LIST body must be {HASH_SIZE + 1} bytes")
    return frame.body[:HASH_SIZE], frame.body[HASH_SIZE]


def header_list(nonce: int, headers: list[MsgHeader], config_hash: bytes) -> WireFrame:
    body = struct.pack("!H", len(headers)) + encode_headers(headers) + config_hash
    return WireFrame(Op.HEADER_LIST, nonce, body)


def parse_header_list(frame: WireFrame, max_count: int | None = None) -> tuple[list[MsgHeader], bytes]:
    body = frame.body
    if len(body) < 2 + HASH_SIZE:
        raise FrameError("HEADER_LIST body too short")
    (count,) = struct.unpack("!H", body[:2])
    if len(body) != 2 + count * HEADER_SIZE + HASH_SIZE:
        raise FrameError(f"HEADER_LIST declares {count} headers but body is {len(body)} bytes")
    if max_count is not None and count > max_count:
        raise FrameError(f"HEADER_LIST has {count} headers, more than S_h={max_count}")
    try:
        headers = decode_headers(body[2 : 2 + count * HEADER_SIZE])
    except HeaderError as exc:
        raise FrameError(f"bad header in list: {exc}") from exc
    if len({h.key for h in headers}) != len(headers):
        raise FrameError("HEADER_LIST repeats a (rid, tid) key")
    return headers, body[-HASH_SIZE:]


def req_header(nonce: int, h: MsgHeader) -> WireFrame:
    return WireFrame(Op.REQ_HEADER, nonce, encode_header(h))


def parse_req_header(frame: WireFrame) -> MsgHeader:
    try:
        return decode_header(frame.body)
    except HeaderError as exc:
        raise FrameError(f"bad REQ_HEADER body: {exc}") from exc


def payload(nonce: int, msg: Message) -> WireFrame:
    body = encode_header(msg.header) + bytes([msg.priority, FOUND]) + msg.payload
    return WireFrame(Op.PAYLOAD, nonce, body)


def payload_not_found(nonce: int, h: MsgHeader) -> WireFrame:
    return WireFrame(Op.PAYLOAD, nonce, encode_header(h) + bytes([0, NOT_FOUND]))


def parse_payload(frame: WireFrame) -> tuple[MsgHeader, Message | None]:
    """Returns the echoed header and the message, or None for a not-found marker."""
    body = frame.body
    if len(body) < HEADER_SIZE + 2:
        raise FrameError("PAYLOAD body too short")
    try:
        h = decode_header(body[:HEADER_SIZE])
    except HeaderError as exc:
        raise FrameError(f"bad PAYLOAD header: {exc}") from exc
    priority, marker = body[HEADER_SIZE], body[HEADER_SIZE + 1]
    if marker == NOT_FOUND:
        return h, None
    if marker != FOUND:
        raise FrameError(f"bad found marker 0x{marker:02x}")
    return h, Message(h, priority, bytes(body[HEADER_SIZE + 2 :]))


def comm_end(nonce: int) -> WireFrame:
    return WireFrame(Op.COMM_END, nonce)


def ack(nonce: int) -> WireFrame:
    return WireFrame(Op.ACK, nonce)


def config_mismatch(nonce: int, config_hash: bytes) -> WireFrame:
    return WireFrame(Op.CONFIG_MISMATCH, nonce, config_hash)

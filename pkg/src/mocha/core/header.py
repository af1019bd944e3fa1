"""Fixed 6-byte message header: robot id, topic id and a split timestamp."""

from __future__ import annotations

import struct
from operator import itemgetter

from mocha.errors import ClockOverflow, InvalidMillis, WrongLength

HEADER_SIZE = 6
_LAYOUT = struct.Struct("!BBHH")

MAX_ID = 255
MAX_SECONDS = 65535


class MsgHeader(tuple):
    """Immutable (rid, tid, time_s, time_ms).

    A tuple underneath so that building and decoding millions of them stays
    cheap. Ordering is disabled: timestamps from different robots are not
    comparable, use ``newer_than`` on headers of the same key.
    """

    __slots__ = ()

    def __new__(cls, rid: int, tid: int, time_s: int, time_ms: int):
        # fast path first; the slow loop only runs to build the error message
        if not (
            type(rid) is int and type(tid) is int and type(time_s) is int and type(time_ms) is int
            and 0 <= rid <= MAX_ID and 0 <= tid <= MAX_ID and 0 <= time_s <= MAX_SECONDS and 0 <= time_ms < 1000
        ):
            _complain(rid, tid, time_s, time_ms)
        return tuple.__new__(cls, (rid, tid, time_s, time_ms))

    rid = property(itemgetter(0))
    tid = property(itemgetter(1))
    time_s = property(itemgetter(2))
    time_ms = property(itemgetter(3))

    def __getnewargs__(self):
        return tuple(self)

    def __repr__(self) -> str:
        return f"MsgHeader(rid={self[0]}, tid={self[1]}, time_s={self[2]}, time_ms={self[3]})"

    def _unordered(self, other):
        raise TypeError("headers have no total order; compare timestamps of one key with newer_than")

    __lt__ = __le__ = __gt__ = __ge__ = _unordered

    @property
    def key(self) -> tuple[int, int]:
        return (self.rid, self.tid)

    @property
    def stamp(self) -> tuple[int, int]:
        """Timestamp as a sortable pair. Only comparable between equal rids."""
        return (self.time_s, self.time_ms)

    @property
    def seconds(self) -> float:
        return self.time_s + self.time_ms / 1000.0

    def newer_than(self, other: MsgHeader) -> bool:
        if self.key != other.key:
            raise ValueError(f"cannot order headers of different keys {self.key} and {other.key}")
        return self.stamp > other.stamp

    @classmethod
    def at(cls, rid: int, tid: int, seconds: float) -> MsgHeader:
        """Build a header from a node-local time in seconds (rounded to the millisecond)."""
        if seconds < 0:
            raise ClockOverflow(f"negative node-local time {seconds}")
        millis = round(seconds * 1000)
        time_s, time_ms = divmod(millis, 1000)
        if time_s > MAX_SECONDS:
            raise ClockOverflow(f"node-local time {seconds:.3f}s exceeds {MAX_SECONDS}s")
        return cls(rid, tid, time_s, time_ms)

    def __str__(self) -> str:
        return f"({self.rid},{self.tid})@{self.time_s}.{self.time_ms:03d}"


def _complain(rid, tid, time_s, time_ms) -> None:
    for name, value, hi in (("rid", rid, MAX_ID), ("tid", tid, MAX_ID), ("time_s", time_s, MAX_SECONDS)):
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= hi:
            raise ValueError(f"{name} must be an integer in [0, {hi}], got {value!r}")
    raise InvalidMillis(f"time_ms must be in [0, 999], got {time_ms!r}")


def encode_header(h: MsgHeader) -> bytes:
    return _LAYOUT.pack(*h)


_tuple_new = tuple.__new__


def decode_header(b: bytes) -> MsgHeader:
    if len(b) != HEADER_SIZE:
        raise WrongLength(f"header must be {HEADER_SIZE} bytes, got {len(b)}")
    rid, tid, time_s, time_ms = _LAYOUT.unpack(b)
    if time_ms >= 1000:
        raise InvalidMillis(f"decoded time_ms {time_ms} >= 1000")
    # unpacked struct fields are in range already, skip re-validation
    return _tuple_new(MsgHeader, (rid, tid, time_s, time_ms))


def encode_headers(headers) -> bytes:
    return b"".join(encode_header(h) for h in headers)


def decode_headers(b: bytes) -> list[MsgHeader]:
    if len(b) % HEADER_SIZE:
        raise WrongLength(f"header list length {len(b)} is not a multiple of {HEADER_SIZE}")
    return [decode_header(b[i : i + HEADER_SIZE]) for i in range(0, len(b), HEADER_SIZE)]

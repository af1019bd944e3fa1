"""In-memory key-value message store.

Keys are ``(rid, tid)``. Each key holds one newest message plus a bounded
history of older versions kept around so that a fetch racing a newer commit
still finds the version it asked for.
"""

from __future__ import annotations

import bisect
import copy
import enum
import hashlib
import threading
from dataclasses import dataclass
from typing import Callable, Iterable

from mocha.core.compression import Codec, IdentityCodec
from mocha.core.config import TeamConfig
from mocha.core.header import MsgHeader, encode_header
from mocha.errors import ConsistencyFault, NotFound, Throttled

DEFAULT_HISTORY = 50


@dataclass(frozen=True, slots=True)
class Message:
    header: MsgHeader
    priority: int
    payload: bytes

    def __post_init__(self) -> None:
        if not 0 <= self.priority <= 255:
            raise ValueError(f"priority must fit in one byte, got {self.priority}")


class CommitResult(enum.Enum):
    COMMITTED = "committed"
    STALE = "stale"


class TokenBucket:
    """Capacity-1 bucket refilled at ``rate`` tokens per second."""

    def __init__(self, rate: float, capacity: float = 1.0):
        self.rate = rate
        self.capacity = capacity
        self.tokens = capacity
        self.updated: float | None = None

    def take(self, now: float) -> bool:
        if self.updated is not None:
            elapsed = max(0.0, now - self.updated)
            self.tokens = min(self.capacity, self.tokens + elapsed * self.rate)
        self.updated = now
        # small epsilon so an exact 1/rate spacing is not rejected by float noise
        if self.tokens >= 1.0 - 1e-9:
            self.tokens -= 1.0
            return True
        return False


class MessageStore:
    """Thread-safe per-node message store.

    Every public method takes the store lock for its whole duration, so each
    call is atomic with respect to other sessions and the local-insert path.
    """

    def __init__(
        self,
        config: TeamConfig,
        owner_rid: int,
        *,
        history: int = DEFAULT_HISTORY,
        codec: Codec | None = None,
    ):
        if not 0 <= owner_rid < config.n_robots:
            raise ValueError(f"owner rid {owner_rid} not in team of {config.n_robots}")
        if history < 0:
            raise ValueError("history capacity must be >= 0")
        self.config = config
        self.owner_rid = owner_rid
        self.history_capacity = history
        self.codec = codec or IdentityCodec()
        self._lock = threading.RLock()
        self._newest: dict[tuple[int, int], Message] = {}
        # per key, sorted ascending by timestamp; oldest evicted first
        self._history: dict[tuple[int, int], list[Message]] = {}
        self._buckets: dict[int, TokenBucket] = {}
        self._listeners: list[Callable[[Message], None]] = []

    # -- writes ---------------------------------------------------------------

    def insert_local(self, topic_name: str, raw_payload: bytes, now: float) -> MsgHeader:
        """Compress and store a locally produced message. Raises Throttled or UnknownTopic."""
        tid = self.config.tid(self.owner_rid, topic_name)
        spec = self.config.topic(self.owner_rid, tid)
        header = MsgHeader.at(self.owner_rid, tid, now)
        with self._lock:
            bucket = self._buckets.setdefault(tid, TokenBucket(spec.rate_hz))
            current = self._newest.get(header.key)
            if current is not None and not header.newer_than(current.header):
                # same millisecond (or a clock step backwards) on one topic
                raise Throttled(f"{topic_name}: header {header} not newer than {current.header}")
            if not bucket.take(now):
                raise Throttled(f"{topic_name}: rate limit {spec.rate_hz} msg/s exceeded")
            msg = Message(header, spec.priority, self.codec.compress(raw_payload))
            self._push_newest(msg, current)
        self._notify(msg)
        return header

    def commit_remote(self, msg: Message) -> CommitResult:
        """Merge a message received from a peer (for any robot id)."""
        key = msg.header.key
        with self._lock:
            current = self._newest.get(key)
            if current is None or msg.header.newer_than(current.header):
                self._push_newest(msg, current)
                result = CommitResult.COMMITTED
            else:
                existing = self._find(msg.header)
                if existing is not None:
                    if existing.payload != msg.payload:
                        raise ConsistencyFault(f"header {msg.header} already stored with different payload")
                    return CommitResult.STALE
                self._retain(msg)
                return CommitResult.STALE
        self._notify(msg)
        return result

    def _push_newest(self, msg: Message, previous: Message | None) -> None:
        if previous is not None:
            self._retain(previous)
        self._newest[msg.header.key] = msg

    def _retain(self, msg: Message) -> None:
        ring = self._history.setdefault(msg.header.key, [])
        stamps = [m.header.stamp for m in ring]
        ring.insert(bisect.bisect_left(stamps, msg.header.stamp), msg)
        while len(ring) > self.history_capacity:
            ring.pop(0)
        if not ring:
            del self._history[msg.header.key]

    def _find(self, h: MsgHeader) -> Message | None:
        current = self._newest.get(h.key)
        if current is not None and current.header == h:
            return current
        for m in self._history.get(h.key, ()):
            if m.header == h:
                return m
        return None

    # -- reads ----------------------------------------------------------------

    def latest_headers(self) -> list[MsgHeader]:
        with self._lock:
            return [self._newest[k].header for k in sorted(self._newest)]

    def get_payload(self, h: MsgHeader) -> Message:
        with self._lock:
            found = self._find(h)
        if found is None:
            raise NotFound(f"no message with header {h}")
        return found

    def newest(self, rid: int, tid: int) -> Message | None:
        with self._lock:
            return self._newest.get((rid, tid))

    def newest_map(self) -> dict[tuple[int, int], Message]:
        with self._lock:
            return dict(self._newest)

    def history(self, rid: int, tid: int) -> list[Message]:
        with self._lock:
            return list(self._history.get((rid, tid), ()))

    def decoded(self, msg: Message) -> bytes:
        return self.codec.decompress(msg.payload)

    def __len__(self) -> int:
        with self._lock:
            return len(self._newest)

    def __contains__(self, h: MsgHeader) -> bool:
        with self._lock:
            return self._find(h) is not None

    # -- misc -----------------------------------------------------------------

    def subscribe(self, callback: Callable[[Message], None]) -> None:
        """Call ``callback`` after every message that becomes newest for its key."""
        self._listeners.append(callback)

    def _notify(self, msg: Message) -> None:
        for cb in self._listeners:
            cb(msg)

    def snapshot(self) -> bytes:
        """Canonical byte serialization of newest entries and history (for equality checks)."""
        parts = []
        with self._lock:
            for key in sorted(set(self._newest) | set(self._history)):
                for m in self._history.get(key, ()):
                    parts.append(b"H" + _pack(m))
                if key in self._newest:
                    parts.append(b"N" + _pack(self._newest[key]))
        return b"".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.snapshot()).hexdigest()

    def newest_digest(self) -> str:
        """Hash of the newest entry per key only; equal across converged peers."""
        h = hashlib.sha256()
        with self._lock:
            for key in sorted(self._newest):
                h.update(_pack(self._newest[key]))
        return h.hexdigest()

    def copy(self) -> MessageStore:
        with self._lock:
            other = MessageStore(
                self.config, self.owner_rid, history=self.history_capacity, codec=self.codec
            )
            other._newest = dict(self._newest)
            other._history = {k: list(v) for k, v in self._history.items()}
            other._buckets = copy.deepcopy(self._buckets)
        return other

    def load(self, messages: Iterable[Message]) -> None:
        for m in messages:
            self.commit_remote(m)


def _pack(m: Message) -> bytes:
    return encode_header(m.header) + bytes([m.priority]) + len(m.payload).to_bytes(4, "big") + m.payload

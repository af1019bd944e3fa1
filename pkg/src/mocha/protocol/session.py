"""Client and server session engines for one synchronization exchange.

Both engines are transport-agnostic: feed them decoded frames (or a
``TIMEOUT`` / ``LINK_LOST`` event) and send whatever frame they return.
"""

from __future__ import annotations

import enum
import secrets
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

from mocha.core.config import TeamConfig
from mocha.core.header import MsgHeader
from mocha.core.store import CommitResult, MessageStore
from mocha.errors import ConsistencyFault, FrameError, NotFound
from mocha.protocol import frames
from mocha.protocol.frames import Op, WireFrame

Clock = Callable[[], float]


class Phase(enum.Enum):
    IDLE = "idle"
    AWAIT_HEADER_LIST = "await_header_list"
    TRANSFER = "transfer"
    ENDING = "ending"
    DONE = "done"
    FAILED = "failed"


class FailReason(enum.Enum):
    TIMEOUT = "timeout"
    INTERRUPTED = "interrupted"
    CONFIG_MISMATCH = "config_mismatch"
    PROTOCOL_VIOLATION = "protocol_violation"


class Outcome(enum.Enum):
    COMPLETE = "complete"
    INTERRUPTED = "interrupted"
    TIMEOUT = "timeout"
    CONFIG_MISMATCH = "config_mismatch"


class _Event:
    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name


TIMEOUT = _Event("TIMEOUT")
"""No reply arrived within the poll timeout."""

LINK_LOST = _Event("LINK_LOST")
"""The transport reported the peer gone for good."""


@dataclass
class SessionReport:
    peer_id: int
    outcome: Outcome
    messages_committed: int = 0
    bytes_received: int = 0
    duration: float = 0.0
    rtt_estimate: float | None = None
    requested_count: int = 0
    skipped: int = 0
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "peer_id": self.peer_id,
            "outcome": self.outcome.value,
            "messages_committed": self.messages_committed,
            "bytes_received": self.bytes_received,
            "duration": self.duration,
            "rtt_estimate": self.rtt_estimate,
            "requested_count": self.requested_count,
            "skipped": self.skipped,
            "detail": self.detail,
        }


_OUTCOME = {
    FailReason.TIMEOUT: Outcome.TIMEOUT,
    FailReason.INTERRUPTED: Outcome.INTERRUPTED,
    FailReason.CONFIG_MISMATCH: Outcome.CONFIG_MISMATCH,
    FailReason.PROTOCOL_VIOLATION: Outcome.INTERRUPTED,
}

_STAGE_ORDER = [Phase.IDLE, Phase.AWAIT_HEADER_LIST, Phase.TRANSFER, Phase.ENDING, Phase.DONE]


def diff_headers(
    local: Iterable[MsgHeader],
    remote: Iterable[MsgHeader],
    cfg: TeamConfig,
    self_rid: int,
) -> list[MsgHeader]:
    """Remote headers worth fetching, in request order.

    A header is wanted when its key is missing locally or the remote copy is
    strictly newer. Freshness is only ever decided between headers of the same
    key, so robot clocks never need to agree. Own-robot keys are skipped.
    Order: priority descending, timestamp descending, (rid, tid) ascending.
    """
    mine = {h.key: h for h in local}
    wanted = []
    for h in remote:
        if h.rid == self_rid:
            continue
        have = mine.get(h.key)
        if have is None or h.newer_than(have):
            wanted.append(h)
    wanted.sort(key=lambda h: (-cfg.priority(h.rid, h.tid), -h.time_s, -h.time_ms, h.rid, h.tid))
    return wanted


class _Session:
    role: str

    def __init__(self, store: MessageStore, nonce: int | None, clock: Clock | None):
        self.store = store
        self.config = store.config
        self.nonce = nonce
        self.clock = clock or time.monotonic
        self.phase = Phase.IDLE
        self.fail_reason: FailReason | None = None
        self.detail = ""
        self.started_at: float | None = None
        self.ended_at: float | None = None

    @property
    def finished(self) -> bool:
        return self.phase in (Phase.DONE, Phase.FAILED)

    def _advance(self, phase: Phase) -> None:
        # phases only move forward; FAILED is reachable from anywhere
        if phase is not Phase.FAILED and _STAGE_ORDER.index(phase) < _STAGE_ORDER.index(self.phase):
            raise RuntimeError(f"illegal phase change {self.phase} -> {phase}")
        self.phase = phase

    def _fail(self, reason: FailReason, detail: str, now: float) -> None:
        self.phase = Phase.FAILED
        self.fail_reason = reason
        self.detail = detail
        self.ended_at = now

    def _now(self, now: float | None) -> float:
        return self.clock() if now is None else now


class ClientSession(_Session):
    """Pulls newer messages from one server into ``store``."""

    role = "client"

    def __init__(
        self,
        store: MessageStore,
        peer_id: int,
        *,
        nonce: int | None = None,
        clock: Clock | None = None,
    ):
        super().__init__(store, secrets.randbits(32) if nonce is None else nonce, clock)
        self.peer_id = peer_id
        self.self_rid = store.owner_rid
        self.plan: list[MsgHeader] = []
        self.pending: deque[MsgHeader] = deque()
        self.awaiting: MsgHeader | None = None
        self.requested_count = 0
        self.committed_count = 0
        self.committed: list[MsgHeader] = []
        self.skipped = 0
        self.bytes_received = 0
        self.rtt: float | None = None
        self._list_sent_at: float | None = None

    def start(self, now: float | None = None) -> WireFrame:
        if self.phase is not Phase.IDLE:
            raise RuntimeError("session already started")
        now = self._now(now)
        self.started_at = now
        self._list_sent_at = now
        self._advance(Phase.AWAIT_HEADER_LIST)
        return frames.req_header_list(self.nonce, self.config.config_hash(), self.self_rid)

    def step(self, incoming, now: float | None = None) -> WireFrame | None:
        now = self._now(now)
        if self.finished:
            return None
        if incoming is TIMEOUT:
            self._fail(FailReason.TIMEOUT, f"no reply in phase {self.phase.value}", now)
            return None
        if incoming is LINK_LOST:
            self._fail(FailReason.INTERRUPTED, f"link lost in phase {self.phase.value}", now)
            return None
        if incoming.nonce != self.nonce:
            return self._violation(f"nonce {incoming.nonce:#x} != {self.nonce:#x}", now)
        if incoming.op is Op.CONFIG_MISMATCH:
            self._fail(FailReason.CONFIG_MISMATCH, "server rejected config hash", now)
            return None
        try:
            if self.phase is Phase.AWAIT_HEADER_LIST and incoming.op is Op.HEADER_LIST:
                return self._on_header_list(incoming, now)
            if self.phase is Phase.TRANSFER and incoming.op is Op.PAYLOAD:
                return self._on_payload(incoming, now)
            if self.phase is Phase.ENDING and incoming.op is Op.ACK:
                self._advance(Phase.DONE)
                self.ended_at = now
                return None
        except FrameError as exc:
            return self._violation(str(exc), now)
        return self._violation(f"unexpected {incoming.op.name} in phase {self.phase.value}", now)

    def _violation(self, detail: str, now: float) -> None:
        self._fail(FailReason.PROTOCOL_VIOLATION, detail, now)
        return None

    def _on_header_list(self, frame: WireFrame, now: float) -> WireFrame | None:
        cfg = self.config
        remote, remote_hash = frames.parse_header_list(frame, max_count=cfg.header_list_size)
        if remote_hash != cfg.config_hash():
            self._fail(FailReason.CONFIG_MISMATCH, "header list carries a different config hash", now)
            return None
        for h in remote:
            if not cfg.has_key(h.rid, h.tid):
                return self._violation(f"header {h} names an undeclared key", now)
        self.bytes_received += len(frame)
        self.rtt = now - self._list_sent_at
        self.plan = diff_headers(self.store.latest_headers(), remote, cfg, self.self_rid)
        bound = cfg.max_requests(self.self_rid)
        if len(self.plan) > bound:
            return self._violation(f"plan of {len(self.plan)} exceeds bound {bound}", now)
        self.pending = deque(self.plan)
        self._advance(Phase.TRANSFER)
        return self._next_request()

    def _on_payload(self, frame: WireFrame, now: float) -> WireFrame | None:
        echoed, msg = frames.parse_payload(frame)
        if echoed != self.awaiting:
            return self._violation(f"payload for {echoed}, requested {self.awaiting}", now)
        self.bytes_received += len(frame)
        if msg is None:
            self.skipped += 1
        else:
            try:
                result = self.store.commit_remote(msg)
            except ConsistencyFault as exc:
                return self._violation(str(exc), now)
            if result is CommitResult.COMMITTED:
                self.committed_count += 1
                self.committed.append(msg.header)
        return self._next_request()

    def _next_request(self) -> WireFrame:
        if self.pending:
            self.awaiting = self.pending.popleft()
            self.requested_count += 1
            return frames.req_header(self.nonce, self.awaiting)
        self.awaiting = None
        self._advance(Phase.ENDING)
        return frames.comm_end(self.nonce)

    @property
    def outcome(self) -> Outcome | None:
        if self.phase is Phase.DONE:
            return Outcome.COMPLETE
        if self.phase is Phase.FAILED:
            return _OUTCOME[self.fail_reason]
        return None

    def report(self) -> SessionReport:
        outcome = self.outcome
        if outcome is None:
            raise RuntimeError("session still in progress")
        start = self.started_at if self.started_at is not None else 0.0
        end = self.ended_at if self.ended_at is not None else start
        return SessionReport(
            peer_id=self.peer_id,
            outcome=outcome,
            messages_committed=self.committed_count,
            bytes_received=self.bytes_received,
            duration=end - start,
            rtt_estimate=self.rtt,
            requested_count=self.requested_count,
            skipped=self.skipped,
            detail=self.detail,
        )


class ServerSession(_Session):
    """Answers one client's requests from ``store``.

    Apart from the nonce adopted from the first frame it keeps no state
    between requests, so a client that reconnects can resume mid-exchange.
    """

    role = "server"

    def __init__(self, store: MessageStore, *, nonce: int | None = None, clock: Clock | None = None):
        super().__init__(store, nonce, clock)
        self.peer_id: int | None = None
        self.served = 0
        self.bytes_sent = 0

    def step(self, incoming: WireFrame, now: float | None = None) -> WireFrame | None:
        now = self._now(now)
        if self.finished:
            return None
        if self.nonce is None:
            self.nonce = incoming.nonce
            self.started_at = now
        elif incoming.nonce != self.nonce:
            self._fail(FailReason.PROTOCOL_VIOLATION, "nonce changed mid-session", now)
            return None
        try:
            reply = self._answer(incoming, now)
        except FrameError as exc:
            self._fail(FailReason.PROTOCOL_VIOLATION, str(exc), now)
            return None
        if reply is not None:
            self.bytes_sent += len(reply)
        return reply

    def _answer(self, frame: WireFrame, now: float) -> WireFrame | None:
        cfg = self.config
        if frame.op is Op.REQ_HEADER_LIST:
            client_hash, client_rid = frames.parse_req_header_list(frame)
            self.peer_id = client_rid
            if client_hash != cfg.config_hash():
                self._fail(FailReason.CONFIG_MISMATCH, "client config hash differs", now)
                return frames.config_mismatch(self.nonce, cfg.config_hash())
            if self.phase is Phase.IDLE:
                self._advance(Phase.TRANSFER)
            return frames.header_list(self.nonce, self.store.latest_headers(), cfg.config_hash())
        if frame.op is Op.REQ_HEADER:
            h = frames.parse_req_header(frame)
            if self.phase is Phase.IDLE:
                self._advance(Phase.TRANSFER)
            self.served += 1
            try:
                return frames.payload(self.nonce, self.store.get_payload(h))
            except NotFound:
                return frames.payload_not_found(self.nonce, h)
        if frame.op is Op.COMM_END:
            self._advance(Phase.DONE)
            self.ended_at = now
            return frames.ack(self.nonce)
        self._fail(FailReason.PROTOCOL_VIOLATION, f"server cannot handle {frame.op.name}", now)
        return None


class LoopbackLink:
    """In-memory frame conduit. Frames go through encode/decode on every hop.

    ``kill_after`` drops every frame once that many have been carried,
    emulating a peer that drives out of range mid-exchange.
    """

    def __init__(self, kill_after: int | None = None):
        self.kill_after = kill_after
        self.carried = 0
        self.bytes = 0

    def carry(self, frame: WireFrame) -> WireFrame | None:
        if self.kill_after is not None and self.carried >= self.kill_after:
            return None
        data = frame.encode()
        self.carried += 1
        self.bytes += len(data)
        return frames.decode_frame(data)


def run_session(
    client_store: MessageStore,
    server_store: MessageStore,
    link: LoopbackLink | None = None,
    clock: Clock | None = None,
) -> SessionReport:
    """Run one complete client-pulls-from-server exchange over ``link``."""
    link = link or LoopbackLink()
    client = ClientSession(client_store, server_store.owner_rid, clock=clock)
    server = ServerSession(server_store, clock=clock)
    out = client.start()
    while out is not None:
        request = link.carry(out)
        if request is None:
            client.step(TIMEOUT)
            break
        reply = server.step(request)
        if reply is None:
            client.step(LINK_LOST)
            break
        reply = link.carry(reply)
        out = client.step(TIMEOUT if reply is None else reply)
    return client.report()


def exchange(a: MessageStore, b: MessageStore) -> tuple[SessionReport, SessionReport]:
    """Bidirectional contact: ``a`` pulls from ``b``, then ``b`` pulls from ``a``."""
    return run_session(a, b), run_session(b, a)

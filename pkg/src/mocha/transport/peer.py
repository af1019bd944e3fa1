"""Socket client and server roles for the synchronization exchange.

The client applies the poll timeout to every awaited reply. Within that
budget a dropped connection is re-dialled and the outstanding request
resent, which is how short outages are ridden out; the server side holds
no per-session state beyond the nonce, so resuming on a fresh connection
is safe. A peer that stays gone yields a Timeout report once the budget
for the pending request runs out.
"""

from __future__ import annotations

import asyncio
import logging
import socket
import time
from dataclasses import dataclass
from typing import Callable

from mocha.core.store import MessageStore
from mocha.errors import ConnectFailed, FrameError
from mocha.protocol.frames import WireFrame
from mocha.protocol.session import LINK_LOST, TIMEOUT, ClientSession, Outcome, ServerSession, SessionReport
from mocha.transport.stream import close_quietly, parse_address, read_frame, write_frame

log = logging.getLogger(__name__)

POLL_TIMEOUT = 5.0
RECONNECT_BACKOFF = 0.05


@dataclass(frozen=True)
class PeerEndpoint:
    """A remote node. ``interval`` of None means manual triggering only."""

    rid: int
    address: str
    interval: float | None = None

    def __post_init__(self) -> None:
        parse_address(self.address)
        if self.interval is not None and self.interval <= 0:
            raise ValueError("sync interval must be positive")

    @property
    def host_port(self) -> tuple[str, int]:
        return parse_address(self.address)


class _Dialer:
    """One logical request/reply channel that re-dials on failure."""

    def __init__(self, host: str, port: int):
        self.host = host
        self.port = port
        self.reader: asyncio.StreamReader | None = None
        self.writer: asyncio.StreamWriter | None = None
        self.reconnects = 0

    async def _connect(self, remaining: float) -> None:
        try:
            self.reader, self.writer = await asyncio.wait_for(
                asyncio.open_connection(self.host, self.port), timeout=remaining
            )
        except socket.gaierror as exc:
            raise ConnectFailed(f"cannot resolve {self.host}: {exc}") from exc

    async def request(self, frame: WireFrame, timeout: float):
        """Send ``frame`` and return the reply, or ``TIMEOUT`` / ``LINK_LOST``."""
        loop = asyncio.get_running_loop()
        deadline = loop.time() + timeout
        first = True
        while True:
            remaining = deadline - loop.time()
            if remaining <= 0:
                return TIMEOUT
            if not first:
                await asyncio.sleep(min(RECONNECT_BACKOFF, remaining))
                remaining = deadline - loop.time()
                if remaining <= 0:
                    return TIMEOUT
            try:
                if self.writer is None:
                    if not first:
                        self.reconnects += 1
                    await self._connect(remaining)
                    remaining = deadline - loop.time()
                await write_frame(self.writer, frame)
                return await asyncio.wait_for(read_frame(self.reader), timeout=max(remaining, 0.0))
            except asyncio.TimeoutError:
                return TIMEOUT
            except FrameError as exc:
                log.warning("garbled reply from %s:%d: %s", self.host, self.port, exc)
                await self.close()
                return LINK_LOST
            except (OSError, asyncio.IncompleteReadError) as exc:
                if isinstance(exc, ConnectFailed):
                    raise
                log.debug("link to %s:%d dropped (%s), retrying", self.host, self.port, exc)
                await self.close()
                first = False

    async def close(self) -> None:
        writer, self.reader, self.writer = self.writer, None, None
        await close_quietly(writer)


async def sync_with(
    store: MessageStore,
    peer: PeerEndpoint,
    timeout: float = POLL_TIMEOUT,
    *,
    clock: Callable[[], float] = time.monotonic,
) -> SessionReport:
    """Pull everything newer from ``peer`` into ``store``.

    Raises ``ConnectFailed`` only for addresses that cannot be resolved;
    unreachable or dead peers come back as a Timeout report.
    """
    host, port = peer.host_port
    dialer = _Dialer(host, port)
    client = ClientSession(store, peer.rid, clock=clock)
    try:
        out = client.start()
        while out is not None:
            reply = await dialer.request(out, timeout)
            out = client.step(reply)
    finally:
        await dialer.close()
    report = client.report()
    if dialer.reconnects:
        report.detail = (report.detail + f" reconnects={dialer.reconnects}").strip()
    return report


ServerHook = Callable[[ServerSession, str], None]


async def handle_connection(
    store: MessageStore,
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
    *,
    idle_timeout: float = POLL_TIMEOUT,
    on_close: ServerHook | None = None,
) -> str:
    """Serve one inbound connection until it ends. Returns why it ended."""
    server = ServerSession(store)
    why = "eof"
    try:
        while not server.finished:
            try:
                frame = await asyncio.wait_for(read_frame(reader), timeout=idle_timeout)
            except asyncio.TimeoutError:
                why = "timeout"
                break
            except asyncio.IncompleteReadError:
                why = "eof"
                break
            except FrameError as exc:
                log.info("dropping connection: malformed frame (%s)", exc)
                why = "malformed"
                break
            reply = server.step(frame)
            if reply is None:
                why = "rejected"
                break
            await write_frame(writer, reply)
        else:
            why = "complete" if server.fail_reason is None else server.fail_reason.value
    except (ConnectionError, OSError):
        why = "reset"
    finally:
        await close_quietly(writer)
        if on_close is not None:
            on_close(server, why)
    return why


async def start_server(
    store: MessageStore,
    bind: str,
    *,
    idle_timeout: float = POLL_TIMEOUT,
    on_close: ServerHook | None = None,
) -> asyncio.Server:
    """Bind and start accepting sessions; bind failures raise immediately."""
    host, port = parse_address(bind)

    async def _handle(reader, writer):
        await handle_connection(store, reader, writer, idle_timeout=idle_timeout, on_close=on_close)

    return await asyncio.start_server(_handle, host, port)


async def serve(store: MessageStore, bind: str, **kwargs) -> None:
    """Run the server role forever."""
    server = await start_server(store, bind, **kwargs)
    async with server:
        await server.serve_forever()


def bound_address(server: asyncio.Server) -> str:
    host, port = server.sockets[0].getsockname()[:2]
    return f"{host}:{port}"


def is_complete(report: SessionReport) -> bool:
    return report.outcome is Outcome.COMPLETE

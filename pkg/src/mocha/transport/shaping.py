"""TCP relay that can stall or sever traffic, for exercising timeouts."""

from __future__ import annotations

import asyncio
import random

from mocha.transport.stream import close_quietly, parse_address


class StallProxy:
    """Forward ``listen`` -> ``upstream``, holding back reply chunks on demand.

    ``stall_prob`` pauses a server-to-client chunk for ``stall_seconds``
    at random. ``pause_after(n, s)`` pauses once after n reply chunks.
    ``sever()`` drops every connection and refuses new ones.
    """

    def __init__(
        self,
        upstream: str,
        *,
        stall_prob: float = 0.0,
        stall_seconds: float = 1.0,
        seed: int | None = None,
    ):
        self.upstream = parse_address(upstream)
        self.stall_prob = stall_prob
        self.stall_seconds = stall_seconds
        self.rng = random.Random(seed)
        self.chunks = 0
        self.stalls = 0
        self._pause_at: tuple[int, float] | None = None
        self._server: asyncio.Server | None = None
        self._writers: set[asyncio.StreamWriter] = set()
        self._severed = False
        self.sever_after: int | None = None

    async def start(self, bind: str = "127.0.0.1:0") -> str:
        host, port = parse_address(bind)
        self._server = await asyncio.start_server(self._accept, host, port)
        h, p = self._server.sockets[0].getsockname()[:2]
        return f"{h}:{p}"

    def pause_after(self, n_chunks: int, seconds: float) -> None:
        self._pause_at = (self.chunks + n_chunks, seconds)

    async def sever(self) -> None:
        self._severed = True
        if self._server is not None:
            self._server.close()
        for w in list(self._writers):
            w.transport.abort()
        self._writers.clear()

    async def close(self) -> None:
        await self.sever()
        if self._server is not None:
            await self._server.wait_closed()

    async def _accept(self, c_reader, c_writer):
        if self._severed:
            c_writer.transport.abort()
            return
        try:
            u_reader, u_writer = await asyncio.open_connection(*self.upstream)
        except OSError:
            c_writer.transport.abort()
            return
        self._writers.update((c_writer, u_writer))
        up = asyncio.create_task(self._pipe(c_reader, u_writer, shaped=False))
        down = asyncio.create_task(self._pipe(u_reader, c_writer, shaped=True))
        await asyncio.wait({up, down}, return_when=asyncio.FIRST_COMPLETED)
        for t in (up, down):
            t.cancel()
        for w in (c_writer, u_writer):
            self._writers.discard(w)
            await close_quietly(w)

    async def _pipe(self, reader, writer, shaped: bool) -> None:
        try:
            while True:
                data = await reader.read(65536)
                if not data:
                    break
                if shaped:
                    self.chunks += 1
                    if self.sever_after is not None and self.chunks > self.sever_after:
                        await self.sever()
                        return
                    await self._maybe_stall()
                writer.write(data)
                await writer.drain()
        except (OSError, asyncio.CancelledError):
            pass

    async def _maybe_stall(self) -> None:
        delay = 0.0
        if self._pause_at is not None and self.chunks >= self._pause_at[0]:
            delay = self._pause_at[1]
            self._pause_at = None
        elif self.stall_prob and self.rng.random() < self.stall_prob:
            delay = self.stall_seconds
        if delay:
            self.stalls += 1
            await asyncio.sleep(delay)

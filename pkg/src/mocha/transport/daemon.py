"""Long-running peer process: listener, per-peer sync timers, metrics output."""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import os
import signal
import time
from collections import deque
from pathlib import Path

from mocha.core.config import TeamConfig
from mocha.core.store import MessageStore
from mocha.metrics import NodeMetrics
from mocha.protocol.session import Outcome, ServerSession, SessionReport
from mocha.transport.peer import POLL_TIMEOUT, PeerEndpoint, bound_address, start_server, sync_with

log = logging.getLogger(__name__)


def configure_logging(default: str = "INFO") -> None:
    level = os.environ.get("MOCHA_LOG_LEVEL", default).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


class PeerDaemon:
    """One robot's sync daemon.

    Message timestamps are seconds since ``epoch`` (daemon start by
    default) so they fit the 16-bit header clock. Peers never need to
    agree on it.
    """

    def __init__(
        self,
        config: TeamConfig,
        rid: int,
        bind: str,
        peers: list[PeerEndpoint] | tuple = (),
        *,
        timeout: float = POLL_TIMEOUT,
        metrics_out: str | Path | None = None,
        metrics_interval: float = 5.0,
        epoch: float | None = None,
        history: int = 50,
        keep_reports: int = 1000,
    ):
        if not 0 <= rid < config.n_robots:
            raise ValueError(f"rid {rid} not in team of {config.n_robots}")
        for p in peers:
            if p.rid == rid:
                raise ValueError("a daemon cannot list itself as a peer")
            if not 0 <= p.rid < config.n_robots:
                raise ValueError(f"peer rid {p.rid} not in team")
        self.config = config
        self.rid = rid
        self.bind = bind
        self.peers = {p.rid: p for p in peers}
        self.timeout = timeout
        self.metrics_out = Path(metrics_out) if metrics_out else None
        self.metrics_interval = metrics_interval
        self.epoch = time.time() if epoch is None else epoch
        self.store = MessageStore(config, rid, history=history)
        self.metrics = NodeMetrics()
        self.reports: deque[dict] = deque(maxlen=keep_reports)
        self.served = {"complete": 0, "other": 0}
        self.address: str | None = None
        self._locks = {r: asyncio.Lock() for r in self.peers}
        self._server: asyncio.Server | None = None
        self._tasks: list[asyncio.Task] = []
        self._stopped = asyncio.Event()
        self._t0 = time.monotonic()

    # clocks
    def now(self) -> float:
        """Mission clock used for message timestamps."""
        return time.time() - self.epoch

    def uptime(self) -> float:
        return time.monotonic() - self._t0

    # data plane
    def insert(self, topic: str, payload: bytes):
        return self.store.insert_local(topic, payload, self.now())

    async def sync_peer(self, rid: int) -> SessionReport | None:
        """One outbound session to ``rid``; None if one is already running."""
        peer = self.peers[rid]
        lock = self._locks[rid]
        if lock.locked():
            return None
        async with lock:
            t_start = self.uptime()
            wall = time.monotonic()
            report = await sync_with(self.store, peer, self.timeout)
            t_end = max(self.uptime(), t_start)
            self.metrics.record_report(rid, report, t_start, t_end)
            entry = report.to_dict()
            entry.update(t_start=t_start, t_end=t_end, wall=time.monotonic() - wall)
            self.reports.append(entry)
            level = logging.INFO if report.outcome is Outcome.COMPLETE else logging.WARNING
            log.log(level, "sync with %d: %s committed=%d in %.3fs %s", rid, report.outcome.value,
                    report.messages_committed, entry["wall"], report.detail)
            return report

    def _on_served(self, session: ServerSession, why: str) -> None:
        self.served["complete" if why == "complete" else "other"] += 1

    # lifecycle
    async def start(self) -> str:
        self._server = await start_server(
            self.store, self.bind, idle_timeout=self.timeout, on_close=self._on_served
        )
        self.address = bound_address(self._server)
        log.info("rid %d listening on %s with %d peers", self.rid, self.address, len(self.peers))
        timed = [p for p in self.peers.values() if p.interval is not None]
        for i, p in enumerate(timed):
            # stagger the channels round-robin over one interval
            offset = p.interval * i / len(timed)
            self._tasks.append(asyncio.create_task(self._timer(p, offset)))
        if self.metrics_out is not None:
            self._tasks.append(asyncio.create_task(self._metrics_loop()))
        with contextlib.suppress(NotImplementedError, AttributeError, RuntimeError):
            asyncio.get_running_loop().add_signal_handler(signal.SIGUSR1, self.dump_metrics)
        return self.address

    async def _timer(self, peer: PeerEndpoint, offset: float) -> None:
        await asyncio.sleep(offset)
        loop = asyncio.get_running_loop()
        next_at = loop.time()
        while True:
            try:
                await self.sync_peer(peer.rid)
            except Exception:
                log.exception("sync with %d crashed", peer.rid)
            next_at += peer.interval
            await asyncio.sleep(max(0.0, next_at - loop.time()))

    def metrics_record(self) -> dict:
        return {
            "t": round(self.uptime(), 6),
            "rid": self.rid,
            "messages": len(self.store),
            "newest_digest": self.store.newest_digest(),
            "served": dict(self.served),
            "peers": self.metrics.snapshot(self.uptime()),
        }

    def dump_metrics(self) -> None:
        line = json.dumps(self.metrics_record(), sort_keys=True)
        log.info("metrics %s", line)
        self._append_metrics(line)

    def _append_metrics(self, line: str) -> None:
        if self.metrics_out is not None:
            with self.metrics_out.open("a") as fh:
                fh.write(line + "\n")

    async def _metrics_loop(self) -> None:
        while True:
            await asyncio.sleep(self.metrics_interval)
            self._append_metrics(json.dumps(self.metrics_record(), sort_keys=True))

    async def stop(self) -> None:
        for t in self._tasks:
            t.cancel()
        for t in self._tasks:
            with contextlib.suppress(asyncio.CancelledError):
                await t
        self._tasks.clear()
        if self._server is not None:
            self._server.close()
            with contextlib.suppress(Exception):
                await asyncio.wait_for(self._server.wait_closed(), 1.0)
        self._stopped.set()

    async def run_forever(self) -> None:
        await self._stopped.wait()

    def request_stop(self) -> None:
        asyncio.get_running_loop().create_task(self.stop())




"""HTTP control plane for a running peer daemon.

The sync protocol itself stays on raw TCP; this API only lets operators
and the CLI insert data, inspect the store and metrics, and force a sync
(standing in for a "peer came into radio range" signal).
"""

from __future__ import annotations

import base64
import contextlib

import uvicorn
from fastapi import FastAPI, HTTPException

from mocha.errors import ClockOverflow, Throttled, UnknownTopic
from mocha.service.schemas import (
    HeaderOut,
    HeadersResponse,
    InsertRequest,
    InsertResponse,
    InsertResult,
    MessageOut,
    SessionOut,
    StatusResponse,
    TriggerResponse,
)
from mocha.transport.daemon import PeerDaemon
from mocha.transport.stream import parse_address


def create_app(daemon: PeerDaemon) -> FastAPI:
    app = FastAPI(title="mocha peer", version="1")
    cfg = daemon.config

    @app.get("/status", response_model=StatusResponse)
    def status():
        return StatusResponse(
            rid=daemon.rid,
            name=cfg.robots[daemon.rid].name,
            address=daemon.address,
            uptime=daemon.uptime(),
            messages=len(daemon.store),
            newest_digest=daemon.store.newest_digest(),
            peers=sorted(daemon.peers),
            served=dict(daemon.served),
        )

    @app.post("/insert", response_model=InsertResponse)
    def insert(req: InsertRequest):
        results = []
        for item in req.items:
            try:
                raw = item.raw()
            except ValueError as exc:
                raise HTTPException(422, f"bad payload for {item.topic}: {exc}")
            try:
                h = daemon.insert(item.topic, raw)
                results.append(InsertResult(topic=item.topic, header=HeaderOut.of(h)))
            except UnknownTopic as exc:
                raise HTTPException(404, str(exc))
            except (Throttled, ClockOverflow) as exc:
                results.append(InsertResult(topic=item.topic, error=f"{type(exc).__name__}: {exc}"))
        return InsertResponse(results=results)

    @app.get("/headers", response_model=HeadersResponse)
    def headers():
        hs = daemon.store.latest_headers()
        return HeadersResponse(
            rid=daemon.rid,
            count=len(hs),
            newest_digest=daemon.store.newest_digest(),
            headers=[HeaderOut.of(h) for h in hs],
        )

    @app.get("/messages/{rid}/{tid}", response_model=MessageOut)
    def message(rid: int, tid: int):
        m = daemon.store.newest(rid, tid)
        if m is None:
            raise HTTPException(404, f"no message for ({rid},{tid})")
        return MessageOut(
            header=HeaderOut.of(m.header),
            priority=m.priority,
            payload_b64=base64.b64encode(daemon.store.decoded(m)).decode(),
        )

    @app.get("/metrics")
    def metrics():
        return daemon.metrics_record()

    @app.get("/sessions", response_model=list[SessionOut])
    def sessions(peer: int | None = None, limit: int = 100):
        out = [r for r in daemon.reports if peer is None or r["peer_id"] == peer]
        return out[-limit:] if limit > 0 else out

    @app.post("/trigger/{peer}", response_model=TriggerResponse)
    async def trigger(peer: int):
        if peer not in daemon.peers:
            raise HTTPException(404, f"rid {peer} is not a configured peer")
        report = await daemon.sync_peer(peer)
        if report is None:
            return TriggerResponse(peer=peer, busy=True)
        return TriggerResponse(peer=peer, report=SessionOut(**daemon.reports[-1]))

    return app


class _EmbeddedServer(uvicorn.Server):
    # the daemon owns process signals; do not let uvicorn swap them out
    @contextlib.contextmanager
    def capture_signals(self):
        yield


def api_server(daemon: PeerDaemon, address: str, log_level: str = "warning") -> uvicorn.Server:
    host, port = parse_address(address)
    config = uvicorn.Config(create_app(daemon), host=host, port=port, log_level=log_level, lifespan="off")
    return _EmbeddedServer(config)

"""Request/response models for the daemon control API."""

from __future__ import annotations

import base64
from typing import Literal

from pydantic import BaseModel, Field


class InsertItem(BaseModel):
    topic: str
    payload: str = ""
    encoding: Literal["utf8", "base64"] = "utf8"

    def raw(self) -> bytes:
        if self.encoding == "base64":
            return base64.b64decode(self.payload, validate=True)
        return self.payload.encode()


class InsertRequest(BaseModel):
    items: list[InsertItem] = Field(min_length=1)


class HeaderOut(BaseModel):
    rid: int
    tid: int
    time_s: int
    time_ms: int
    text: str

    @classmethod
    def of(cls, h) -> "HeaderOut":
        return cls(rid=h.rid, tid=h.tid, time_s=h.time_s, time_ms=h.time_ms, text=str(h))


class InsertResult(BaseModel):
    topic: str
    header: HeaderOut | None = None
    error: str | None = None


class InsertResponse(BaseModel):
    results: list[InsertResult]


class HeadersResponse(BaseModel):
    rid: int
    count: int
    newest_digest: str
    headers: list[HeaderOut]


class MessageOut(BaseModel):
    header: HeaderOut
    priority: int
    payload_b64: str


class SessionOut(BaseModel):
    peer_id: int
    outcome: str
    messages_committed: int
    bytes_received: int
    duration: float
    rtt_estimate: float | None = None
    requested_count: int
    skipped: int
    detail: str = ""
    t_start: float | None = None
    t_end: float | None = None
    wall: float | None = None


class StatusResponse(BaseModel):
    rid: int
    name: str
    address: str | None
    uptime: float
    messages: int
    newest_digest: str
    peers: list[int]
    served: dict[str, int]


class TriggerResponse(BaseModel):
    peer: int
    busy: bool = False
    report: SessionOut | None = None

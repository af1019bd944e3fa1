"""Per-peer link metrics: last sync time, RTT, bandwidth and exchange status."""

from __future__ import annotations

import enum
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from mocha.errors import OutOfOrder

RTT_ALPHA = 0.125
BANDWIDTH_WINDOW = 10.0


class Status(enum.Enum):
    IDLE = "idle"
    COMM_START = "comm_start"
    COMM_END = "comm_end"
    TIMEOUT = "timeout"


@dataclass
class PeerMetrics:
    rid: int
    status: Status = Status.IDLE
    last_sync_time: float | None = None
    rtt: float | None = None
    last_event_time: float | None = None
    last_outcome: str | None = None
    last_duration: float | None = None
    phy: float | None = None
    _window: deque = field(default_factory=deque, repr=False)

    def bandwidth(self, now: float, window: float = BANDWIDTH_WINDOW) -> float:
        """Bytes per second over the trailing window ending at ``now``."""
        total = sum(n for t, n in self._window if now - window < t <= now)
        return total / window

    def to_dict(self, now: float | None = None) -> dict:
        out = {
            "rid": self.rid,
            "status": self.status.value,
            "last_sync_time": self.last_sync_time,
            "rtt": self.rtt,
            "last_outcome": self.last_outcome,
            "last_duration": self.last_duration,
        }
        if now is not None:
            out["bandwidth"] = self.bandwidth(now)
        if self.phy is not None:
            out["phy"] = self.phy
        return out


class NodeMetrics:
    """Metrics one node keeps about each of its peers."""

    def __init__(self, rtt_alpha: float = RTT_ALPHA, window: float = BANDWIDTH_WINDOW):
        self.rtt_alpha = rtt_alpha
        self.window = window
        self._peers: dict[int, PeerMetrics] = {}
        self._lock = threading.Lock()

    def peer(self, rid: int) -> PeerMetrics:
        with self._lock:
            return self._peers.setdefault(rid, PeerMetrics(rid))

    def record_session_event(self, rid: int, event: Status, t: float) -> PeerMetrics:
        with self._lock:
            pm = self._peers.setdefault(rid, PeerMetrics(rid))
            if pm.last_event_time is not None and t < pm.last_event_time:
                raise OutOfOrder(f"event at {t} precedes previous event at {pm.last_event_time} for peer {rid}")
            pm.last_event_time = t
            pm.status = event
            if event is Status.COMM_END:
                pm.last_sync_time = t
            return pm

    def record_rtt(self, rid: int, sample: float) -> float:
        with self._lock:
            pm = self._peers.setdefault(rid, PeerMetrics(rid))
            pm.rtt = sample if pm.rtt is None else (1 - self.rtt_alpha) * pm.rtt + self.rtt_alpha * sample
            return pm.rtt

    def record_bytes(self, rid: int, nbytes: int, t: float) -> None:
        with self._lock:
            pm = self._peers.setdefault(rid, PeerMetrics(rid))
            pm._window.append((t, nbytes))
            while pm._window and pm._window[0][0] <= t - self.window:
                pm._window.popleft()

    def record_phy(self, rid: int, reading: float) -> None:
        with self._lock:
            self._peers.setdefault(rid, PeerMetrics(rid)).phy = reading

    def record_report(self, rid: int, report, t_start: float, t_end: float) -> None:
        """Fold a finished client session into the peer's metrics."""
        from mocha.protocol.session import Outcome

        self.record_session_event(rid, Status.COMM_START, t_start)
        final = Status.COMM_END if report.outcome is Outcome.COMPLETE else Status.TIMEOUT
        self.record_session_event(rid, final, t_end)
        if report.rtt_estimate is not None:
            self.record_rtt(rid, report.rtt_estimate)
        if report.bytes_received:
            self.record_bytes(rid, report.bytes_received, t_end)
        with self._lock:
            pm = self._peers[rid]
            pm.last_outcome = report.outcome.value
            pm.last_duration = report.duration

    def snapshot(self, now: float | None = None) -> list[dict]:
        with self._lock:
            return [self._peers[r].to_dict(now) for r in sorted(self._peers)]


def bandwidth_series(
    records: Iterable[Mapping],
    bin_size: float = 1.0,
    nodes: Iterable[int] | None = None,
    duration: float | None = None,
) -> dict[int, list[float]]:
    """Bytes/s per sending node, binned by the frame's transmission end time.

    ``records`` are event-log dicts; only ``frame_tx`` records count. Empty
    bins are emitted as zeros up to ``duration`` (or the last frame).
    """
    frames = [r for r in records if r.get("type") == "frame_tx"]
    node_set = set(nodes or ()) | {r["src"] for r in frames}
    end = duration if duration is not None else max((r["end"] for r in frames), default=0.0)
    nbins = max(1, math.floor(end / bin_size) + 1) if (frames or duration) else 0
    series = {n: [0.0] * nbins for n in sorted(node_set)}
    for r in frames:
        b = math.floor(r["end"] / bin_size)
        if b >= nbins:
            for s in series.values():
                s.extend([0.0] * (b + 1 - len(s)))
            nbins = b + 1
        series[r["src"]][b] += r["bytes"] / bin_size
    return series

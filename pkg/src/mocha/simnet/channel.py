"""Single shared wireless channel: one transmission at a time, FIFO order."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from mocha.simnet.latency import LatencyModel, Stage, sample_latency


@dataclass(frozen=True)
class Transmission:
    sender: int
    nbytes: int
    stage: Stage
    requested: float
    start: float
    end: float

    @property
    def wait(self) -> float:
        return self.start - self.requested


class Channel:
    """Global FIFO channel.

    Requests must arrive in non-decreasing time. A request issued while the
    channel is busy starts when every transmission queued ahead of it ends.
    """

    def __init__(self, model: LatencyModel | None = None, rng: np.random.Generator | None = None):
        self.model = model or LatencyModel()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.busy_until = 0.0
        self.queue: deque[Transmission] = deque()
        self.log: list[Transmission] = []
        self._last_request = -math.inf

    def request_tx(
        self,
        sender: int,
        nbytes: int,
        stage: Stage | str,
        t_now: float,
        duration: float | None = None,
    ) -> tuple[float, float, float]:
        """Schedule a transmission; returns ``(wait, start, end)``.

        ``duration`` overrides the sampled latency (used for closed-form checks).
        """
        if t_now < self._last_request:
            raise ValueError(f"request at {t_now} precedes earlier request at {self._last_request}")
        self._last_request = t_now
        stage = Stage(stage)
        while self.queue and self.queue[0].end <= t_now:
            self.queue.popleft()
        if duration is None:
            duration = sample_latency(self.model, stage, nbytes, self.rng)
        start = max(t_now, self.busy_until)
        end = start + duration
        tx = Transmission(sender, nbytes, stage, t_now, start, end)
        self.busy_until = end
        self.queue.append(tx)
        self.log.append(tx)
        return start - t_now, start, end

    @property
    def waits(self) -> list[float]:
        return [tx.wait for tx in self.log]

    def pending(self, t: float) -> int:
        """Transmissions queued or in flight at time ``t``."""
        return sum(1 for tx in self.queue if tx.end > t)

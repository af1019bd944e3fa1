"""Per-byte exponential transmission latency.

Each byte of a frame costs an independent Exp(lambda) delay in
milliseconds, so a B-byte frame takes Gamma(B, 1/lambda) ms. Three rates
cover the exchange stages: header list, payload transfer, end of comms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from mocha.protocol.frames import Op

# fitted from field data; units are 1/ms per byte
LAMBDA_HEADER = 2.67
LAMBDA_TRANSFER = 7.63
LAMBDA_END = 0.51


class Stage(str, enum.Enum):
    HEADER = "header"
    TRANSFER = "transfer"
    END = "end"


_STAGE_OF_OP = {
    Op.REQ_HEADER_LIST: Stage.HEADER,
    Op.HEADER_LIST: Stage.HEADER,
    Op.CONFIG_MISMATCH: Stage.HEADER,
    Op.REQ_HEADER: Stage.TRANSFER,
    Op.PAYLOAD: Stage.TRANSFER,
    Op.COMM_END: Stage.END,
    Op.ACK: Stage.END,
}


def stage_for(op: Op) -> Stage:
    return _STAGE_OF_OP[op]


@dataclass(frozen=True)
class LatencyModel:
    lambda_h: float = LAMBDA_HEADER
    lambda_t: float = LAMBDA_TRANSFER
    lambda_e: float = LAMBDA_END

    def __post_init__(self) -> None:
        for name in ("lambda_h", "lambda_t", "lambda_e"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def rate(self, stage: Stage | str) -> float:
        stage = Stage(stage)
        if stage is Stage.HEADER:
            return self.lambda_h
        if stage is Stage.TRANSFER:
            return self.lambda_t
        return self.lambda_e

    def mean_seconds(self, stage: Stage | str, nbytes: int) -> float:
        return nbytes / self.rate(stage) / 1000.0


def sample_latency(
    model: LatencyModel,
    stage: Stage | str,
    nbytes: int,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Transmission time in seconds for an ``nbytes`` frame (array if ``size`` given)."""
    if nbytes < 1:
        raise ValueError("nbytes must be >= 1")
    ms = rng.gamma(shape=nbytes, scale=1.0 / model.rate(stage), size=size)
    # a gamma draw of exactly 0.0 is possible in floating point; keep durations positive
    ms = np.maximum(ms, np.finfo(float).tiny)
    return ms / 1000.0 if size is not None else float(ms) / 1000.0

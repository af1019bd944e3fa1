from mocha.protocol.frames import Op, WireFrame, decode_frame
from mocha.protocol.session import (
    LINK_LOST,
    TIMEOUT,
    ClientSession,
    FailReason,
    LoopbackLink,
    Outcome,
    Phase,
    ServerSession,
    SessionReport,
    diff_headers,
    exchange,
    run_session,
)

__all__ = [
    "LINK_LOST",
    "TIMEOUT",
    "ClientSession",
    "FailReason",
    "LoopbackLink",
    "Op",
    "Outcome",
    "Phase",
    "ServerSession",
    "SessionReport",
    "WireFrame",
    "decode_frame",
    "diff_headers",
    "exchange",
    "run_session",
]

from mocha.transport.daemon import PeerDaemon, configure_logging
from mocha.transport.peer import (
    POLL_TIMEOUT,
    PeerEndpoint,
    bound_address,
    handle_connection,
    serve,
    start_server,
    sync_with,
)
from mocha.transport.shaping import StallProxy

__all__ = [
    "POLL_TIMEOUT",
    "PeerDaemon",
    "PeerEndpoint",
    "StallProxy",
    "bound_address",
    "configure_logging",
    "handle_connection",
    "serve",
    "start_server",
    "sync_with",
]

"""Opportunistic gossip synchronization for intermittently connected robot teams."""

from mocha.core import (
    ConsistencyFault,
    Message,
    MessageStore,
    MsgHeader,
    TeamConfig,
    decode_header,
    encode_header,
)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyFault",
    "Message",
    "MessageStore",
    "MsgHeader",
    "TeamConfig",
    "decode_header",
    "encode_header",
]

from mocha.core.compression import Codec, IdentityCodec, LZ4Codec, get_codec
from mocha.core.config import RobotSpec, TeamConfig, TopicSpec
from mocha.core.header import (
    HEADER_SIZE,
    MsgHeader,
    decode_header,
    decode_headers,
    encode_header,
    encode_headers,
)
from mocha.core.store import CommitResult, Message, MessageStore, TokenBucket
from mocha.errors import (
    ConsistencyFault,
    InvalidMillis,
    NotFound,
    Throttled,
    UnknownTopic,
    WrongLength,
)

__all__ = [
    "HEADER_SIZE",
    "Codec",
    "CommitResult",
    "ConsistencyFault",
    "IdentityCodec",
    "InvalidMillis",
    "LZ4Codec",
    "Message",
    "MessageStore",
    "MsgHeader",
    "NotFound",
    "RobotSpec",
    "TeamConfig",
    "Throttled",
    "TokenBucket",
    "TopicSpec",
    "UnknownTopic",
    "WrongLength",
    "decode_header",
    "decode_headers",
    "encode_header",
    "encode_headers",
    "get_codec",
]

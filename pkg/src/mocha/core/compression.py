"""Payload codecs. Payloads are stored and forwarded in their compressed form."""

from __future__ import annotations

from typing import Protocol

import lz4.block


class Codec(Protocol):
    name: str

    def compress(self, data: bytes) -> bytes: ...

    def decompress(self, data: bytes) -> bytes: ...


class IdentityCodec:
    name = "identity"

    def compress(self, data: bytes) -> bytes:
        return bytes(data)

    def decompress(self, data: bytes) -> bytes:
        return bytes(data)


class LZ4Codec:
    name = "lz4"

    def compress(self, data: bytes) -> bytes:
        # store_size prefixes the uncompressed length so decompress needs no hint
        return lz4.block.compress(bytes(data), store_size=True)

    def decompress(self, data: bytes) -> bytes:
        return lz4.block.decompress(data)


CODECS = {"identity": IdentityCodec, "lz4": LZ4Codec}


def get_codec(name: str) -> Codec:
    try:
        return CODECS[name]()
    except KeyError:
        raise ValueError(f"unknown codec {name!r}; choose from {sorted(CODECS)}") from None

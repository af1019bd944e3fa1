"""Length-prefixed frame I/O over asyncio streams."""

from __future__ import annotations

import asyncio

from mocha.errors import ConnectFailed
from mocha.protocol.frames import PREFIX_SIZE, WireFrame, decode_frame, decode_prefix


async def read_frame(reader: asyncio.StreamReader) -> WireFrame:
    """Read one frame. EOF surfaces as ``asyncio.IncompleteReadError``, garbage as ``FrameError``."""
    prefix = await reader.readexactly(PREFIX_SIZE)
    _, _, body_len = decode_prefix(prefix)
    body = await reader.readexactly(body_len) if body_len else b""
    return decode_frame(prefix + body)


async def write_frame(writer: asyncio.StreamWriter, frame: WireFrame) -> None:
    writer.write(frame.encode())
    await writer.drain()


def parse_address(address: str) -> tuple[str, int]:
    """Split ``host:port`` (IPv6 hosts in brackets)."""
    host, sep, port = address.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ConnectFailed(f"bad address {address!r}, expected host:port")
    port_n = int(port)
    if not 0 <= port_n <= 65535:
        raise ConnectFailed(f"port out of range in {address!r}")
    if host.startswith("[") and host.endswith("]"):
        host = host[1:-1]
    return host, port_n


async def close_quietly(writer: asyncio.StreamWriter | None) -> None:
    if writer is None:
        return
    writer.close()
    try:
        await writer.wait_closed()
    except (OSError, asyncio.CancelledError):
        pass

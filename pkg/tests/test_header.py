import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mocha.core import InvalidMillis, MsgHeader, WrongLength, decode_header, encode_header
from mocha.errors import ClockOverflow


def shift_oracle(rid, tid, s, ms):
    # independent of struct: explicit big-endian byte splitting
    return bytes([rid, tid, (s >> 8) & 0xFF, s & 0xFF, (ms >> 8) & 0xFF, ms & 0xFF])


@pytest.mark.parametrize(
    "fields, expected",
    [
        ((2, 5, 100, 250), "020500640 0fa"),
        ((0, 0, 0, 0), "000000000000"),
        ((255, 255, 65535, 999), "ffffffff03e7"),
    ],
)
def test_encode_examples(fields, expected):
    expected = bytes.fromhex(expected.replace(" ", ""))
    assert shift_oracle(*fields) == expected
    assert encode_header(MsgHeader(*fields)) == expected


def test_decode_examples():
    assert decode_header(bytes.fromhex("02050064 00fa")) == MsgHeader(2, 5, 100, 250)
    assert decode_header(bytes(6)) == MsgHeader(0, 0, 0, 0)


def test_decode_rejects_millis_overflow():
    with pytest.raises(InvalidMillis):
        decode_header(bytes.fromhex("000000000400"))


@pytest.mark.parametrize("n", [0, 5, 7, 12])
def test_decode_wrong_length(n):
    with pytest.raises(WrongLength):
        decode_header(bytes(n))


@pytest.mark.parametrize("bad", [dict(time_ms=1000), dict(time_ms=65535), dict(rid=256), dict(tid=-1), dict(time_s=65536)])
def test_construction_validates(bad):
    fields = dict(rid=1, tid=1, time_s=1, time_ms=1) | bad
    with pytest.raises(ValueError):
        MsgHeader(**fields)


def test_random_roundtrip_10k():
    rng = random.Random(1)
    for _ in range(10_000):
        h = MsgHeader(rng.randrange(256), rng.randrange(256), rng.randrange(65536), rng.randrange(1000))
        b = encode_header(h)
        assert len(b) == 6
        assert b == shift_oracle(h.rid, h.tid, h.time_s, h.time_ms)
        assert decode_header(b) == h


@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 65535), st.integers(0, 999))
def test_roundtrip_property(rid, tid, s, ms):
    h = MsgHeader(rid, tid, s, ms)
    assert decode_header(encode_header(h)) == h


def test_ordering_within_key_only():
    a, b = MsgHeader(2, 0, 100, 500), MsgHeader(2, 0, 100, 600)
    assert b.newer_than(a) and not a.newer_than(b) and not a.newer_than(a)
    assert MsgHeader(2, 0, 101, 0).newer_than(MsgHeader(2, 0, 100, 999))
    with pytest.raises(ValueError):
        a.newer_than(MsgHeader(3, 0, 0, 0))


def test_from_seconds():
    assert MsgHeader.at(1, 0, 10.5) == MsgHeader(1, 0, 10, 500)
    assert MsgHeader.at(1, 0, 10.9996) == MsgHeader(1, 0, 11, 0)
    with pytest.raises(ClockOverflow):
        MsgHeader.at(1, 0, 65536.0)

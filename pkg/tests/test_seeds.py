import numpy as np
import pytest

from bosoncert.seeds import fnv1a64, stream


def test_fnv1a64_published_vectors():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_stream_is_reproducible():
    a = stream(7, 3, "role").integers(0, 2**63, size=8)
    b = stream(7, 3, "role").integers(0, 2**63, size=8)
    assert np.array_equal(a, b)


def test_stream_separates_every_key_part():
    base = stream(7, 3, "role").integers(0, 2**63, size=8)
    for other in (stream(8, 3, "role"), stream(7, 4, "role"), stream(7, 3, "else")):
        assert not np.array_equal(base, other.integers(0, 2**63, size=8))


def test_stream_defaults_match_explicit_keys():
    assert np.array_equal(
        stream(5).integers(0, 2**63, size=4),
        stream(5, 0, "").integers(0, 2**63, size=4),
    )


def test_stream_rejects_negative_keys():
    with pytest.raises(ValueError):
        stream(-1)
    with pytest.raises(ValueError):
        stream(0, -2)

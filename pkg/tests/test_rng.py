import numpy as np
import pytest

from isospec.rng import RngStream, as_generator


def test_same_pair_same_sequence():
    a = RngStream(5, 3).generator().standard_normal(8)
    b = RngStream(5, 3).generator().standard_normal(8)
    assert np.array_equal(a, b)


def test_substreams_are_distinct_and_stable():
    s = RngStream(1)
    ids = {s.substream("chunk", i).stream_id for i in range(200)}
    assert len(ids) == 200
    assert s.substream("x", 4) == s.substream("x", 4)
    assert s.substream("x", 4) != s.substream("y", 4)


def test_roundtrip_and_validation():
    s = RngStream(9, 11)
    assert RngStream.from_dict(s.to_dict()) == s
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        s.substream(-3)


def test_as_generator_accepts_all_forms():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert np.array_equal(as_generator(3).random(4), RngStream(3).generator().random(4))

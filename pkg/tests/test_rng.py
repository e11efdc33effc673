import numpy as np
from hypothesis import given, strategies as st

from loglaw.rng import RngStream, rng_stream


def test_same_key_same_draws():
    a = rng_stream(42, 0).generator().random(1000)
    b = rng_stream(42, 0).generator().random(1000)
    assert np.array_equal(a, b)


def test_neighbouring_streams_differ():
    a = rng_stream(42, 0).generator().random(1000)
    b = rng_stream(42, 1).generator().random(1000)
    assert not np.any(a == b)


def test_streams_uncorrelated():
    a = rng_stream(42, 0).generator().random(100_000)
    b = rng_stream(42, 1).generator().random(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


def test_counter_offsets_the_stream():
    g = rng_stream(5, 3).generator()
    g.random(4)
    # Philox draws 4 words per counter step; one block of 4 doubles
    later = RngStream(5, 3, counter=1).generator().random(4)
    assert np.array_equal(g.random(4), later)


@given(st.integers(0, 2**63), st.integers(0, 2**40), st.integers(0, 1000))
def test_substreams_never_collide_with_trajectory_streams(seed, index, tag):
    s = rng_stream(seed, index)
    sub = s.substream(tag)
    assert sub.key != s.key
    assert sub.stream_index >= 2**48


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_output_is_a_function_of_the_key(seed, index):
    a = rng_stream(seed, index).generator().integers(0, 2**63, 3)
    b = RngStream(seed, index).generator().integers(0, 2**63, 3)
    assert np.array_equal(a, b)

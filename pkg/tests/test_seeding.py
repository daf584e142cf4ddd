import numpy as np

from poisson_lab.seeding import STREAM_CONFIG, STREAM_PATH, child_seed, rng


def test_same_key_same_stream():
    a = rng(42, STREAM_PATH).random(5)
    b = rng(42, STREAM_PATH).random(5)
    assert np.array_equal(a, b)


def test_different_keys_differ():
    assert not np.array_equal(rng(42, STREAM_PATH).random(5), rng(42, STREAM_CONFIG).random(5))
    assert not np.array_equal(rng(42, STREAM_CONFIG, 0).random(5), rng(42, STREAM_CONFIG, 1).random(5))


def test_child_seed_is_64_bit_and_stable():
    s = child_seed(7, 3, 1)
    assert 0 <= s < 2 ** 64
    assert s == child_seed(7, 3, 1)
    assert s != child_seed(7, 3, 2)


def test_negative_and_large_roots_accepted():
    rng(-1).random()
    rng(2 ** 70).random()

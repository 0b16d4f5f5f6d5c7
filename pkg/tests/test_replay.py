import numpy as np
import pytest

from susp.learning.replay import ReplayPool


def _fill(pool, count, start=0):
    for i in range(start, start + count):
        pool.add(np.full(4, i), np.full(2, -i), float(i), np.full(4, i + 1), i % 5 == 0)


def test_size_grows_to_capacity():
    pool = ReplayPool(10, 4, 2)
    _fill(pool, 7)
    assert len(pool) == 7
    _fill(pool, 7, start=7)
    assert len(pool) == 10
    assert pool.cursor == 4


def test_oldest_entries_are_overwritten():
    pool = ReplayPool(5, 4, 2)
    _fill(pool, 8)
    batch = pool.sample(200, np.random.default_rng(0))
    assert set(batch.rewards.tolist()) == {3.0, 4.0, 5.0, 6.0, 7.0}


def test_sampled_transitions_stay_aligned():
    pool = ReplayPool(20, 4, 2)
    _fill(pool, 20)
    batch = pool.sample(64, np.random.default_rng(1))
    assert len(batch) == 64
    assert batch.observations.shape == (64, 4)
    assert batch.actions.shape == (64, 2)
    assert np.array_equal(batch.observations[:, 0], batch.rewards)
    assert np.array_equal(batch.next_observations[:, 0], batch.rewards + 1)
    assert np.array_equal(batch.dones, (batch.rewards % 5 == 0).astype(float))


def test_sampling_is_seeded():
    pool = ReplayPool(50, 4, 2)
    _fill(pool, 50)
    a = pool.sample_indices(16, np.random.default_rng(3))
    b = pool.sample_indices(16, np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_empty_pool_cannot_sample():
    with pytest.raises(ValueError):
        ReplayPool(5, 4, 2).sample(1, np.random.default_rng(0))


def test_capacity_must_be_positive():
    with pytest.raises(ValueError):
        ReplayPool(0, 4, 2)


def test_draws_are_uniform_over_stored_transitions():
    pool = ReplayPool(100, 4, 2)
    _fill(pool, 100)
    draws = 100_000
    counts = np.bincount(pool.sample_indices(draws, np.random.default_rng(5)), minlength=100)
    expected = draws / 100
    sigma = np.sqrt(draws * 0.01 * 0.99)
    assert np.all(np.abs(counts - expected) <= 5 * sigma)

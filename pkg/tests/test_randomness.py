"""Grids, increment streams, truncation, and correlation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awsde import (
    IncrementBatch,
    TimeGrid,
    correlate,
    sample_increment_block,
    sample_increments,
    truncate_increments,
    truncation_level,
)


def test_grid_nodes():
    grid = TimeGrid(horizon=1.0, steps=4)
    assert grid.step == 0.25
    assert np.array_equal(grid.times(), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_grid_coarsen():
    fine = TimeGrid(horizon=1.0, steps=8)
    coarse = fine.coarsen(4)
    assert coarse.steps == 2
    assert coarse.horizon == fine.horizon


def test_grid_validation():
    with pytest.raises(Exception):
        TimeGrid(horizon=0.0, steps=4)
    with pytest.raises(Exception):
        TimeGrid(horizon=1.0, steps=0)


def test_truncation_level_values():
    # a_h = 4 sqrt(h log(1/h)); closed forms at h = 1/e and h = 1/4
    assert truncation_level(math.exp(-1.0)).value == pytest.approx(4.0 * math.exp(-0.5), rel=1e-12)
    assert truncation_level(0.25).value == pytest.approx(4.0 * math.sqrt(0.25 * math.log(4.0)), rel=1e-12)
    assert truncation_level(0.25).value == pytest.approx(2.3548200450309493, rel=1e-12)


def test_truncation_level_decreasing_in_k():
    levels = [truncation_level(2.0 ** -k).value for k in range(2, 21)]
    assert all(a > b for a, b in zip(levels, levels[1:]))


def test_truncation_level_accepts_grid():
    grid = TimeGrid(horizon=1.0, steps=4)
    assert truncation_level(grid).value == truncation_level(0.25).value


def test_same_stream_id_reproduces():
    grid = TimeGrid(horizon=1.0, steps=64)
    a = sample_increments(grid, seed=7, path_index=3)
    b = sample_increments(grid, seed=7, path_index=3)
    assert np.array_equal(a.values, b.values)


def test_distinct_paths_differ():
    grid = TimeGrid(horizon=1.0, steps=64)
    a = sample_increments(grid, seed=7, path_index=0)
    b = sample_increments(grid, seed=7, path_index=1)
    assert not np.array_equal(a.values, b.values)


def test_block_rows_match_single_paths():
    grid = TimeGrid(horizon=1.0, steps=32)
    block = sample_increment_block(grid, seed=11, start=5, count=4)
    for i in range(4):
        single = sample_increments(grid, seed=11, path_index=5 + i)
        assert np.array_equal(block[i], single.values)


def test_increment_moments():
    # 10^6 draws at h = 1/4: the sample mean of a single increment lies
    # within 4 sqrt(h / n) of 0 and the sample variance within 0.005 of h.
    grid = TimeGrid(horizon=1.0, steps=4)
    block = sample_increment_block(grid, seed=0, start=0, count=250_000)
    draws = block.ravel()
    assert draws.size == 10 ** 6
    assert abs(float(draws.mean())) < 4.0 * math.sqrt(0.25 / draws.size)
    assert abs(float(draws.var()) - 0.25) < 0.005


def test_truncate_clips_to_band():
    grid = TimeGrid(horizon=1.0, steps=4)
    a_h = truncation_level(grid).value
    batch = IncrementBatch(grid=grid, seed=0, path_index=0,
                           values=np.array([3.0, 0.1, -3.0, -0.1]))
    out = truncate_increments(batch)
    assert out.truncated_at == a_h
    assert out.values[0] == a_h
    assert out.values[2] == -a_h
    # values already inside the band pass through unchanged
    assert out.values[1] == 0.1
    assert out.values[3] == -0.1


def test_truncation_error_moment():
    # E|dW - clipped dW|^2 < h^2 at h = 2^-6, checked on 10^7 draws
    h = 2.0 ** -6
    grid = TimeGrid(horizon=1.0, steps=64)
    a_h = truncation_level(grid).value
    rows = 10 ** 7 // 64
    block = sample_increment_block(grid, seed=3, start=0, count=rows)
    clipped = np.clip(block, -a_h, a_h)
    gap2 = float(np.mean((block - clipped) ** 2))
    assert block.size == rows * 64 >= 10 ** 7 - 64
    assert gap2 < h * h


def test_correlate_endpoints_exact():
    grid = TimeGrid(horizon=1.0, steps=16)
    a = sample_increments(grid, seed=1, path_index=0)
    b = sample_increments(grid, seed=1, path_index=1)
    assert np.array_equal(correlate(a, b, 1.0).values, a.values)
    assert np.array_equal(correlate(a, b, 0.0).values, b.values)


def test_correlate_sample_correlation():
    grid = TimeGrid(horizon=1.0, steps=2)
    n = 10 ** 6
    a = sample_increment_block(grid, seed=5, start=0, count=n // 2).ravel()
    b = sample_increment_block(grid, seed=6, start=0, count=n // 2).ravel()
    mixed = 0.5 * a + math.sqrt(0.75) * b
    rho = float(np.corrcoef(a, mixed)[0, 1])
    assert abs(rho - 0.5) < 0.01


def test_correlate_rejects_mismatched_grids():
    a = sample_increments(TimeGrid(1.0, 8), seed=1, path_index=0)
    b = sample_increments(TimeGrid(1.0, 16), seed=1, path_index=0)
    with pytest.raises(ValueError):
        correlate(a, b, 0.5)
    with pytest.raises(ValueError):
        correlate(a, a, 1.5)


def test_increments_are_read_only():
    batch = sample_increments(TimeGrid(1.0, 8), seed=1, path_index=0)
    with pytest.raises(ValueError):
        batch.values[0] = 0.0


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
       path=st.integers(min_value=0, max_value=2 ** 16))
@settings(max_examples=25, deadline=None)
def test_truncation_idempotent_and_monotone(seed, path):
    grid = TimeGrid(horizon=1.0, steps=16)
    batch = sample_increments(grid, seed=seed, path_index=path)
    once = truncate_increments(batch)
    twice = truncate_increments(once)
    assert np.array_equal(once.values, twice.values)
    order = np.argsort(batch.values)
    assert np.all(np.diff(once.values[order]) >= 0.0)

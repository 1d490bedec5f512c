"""Reproducible Brownian increments on uniform time grids.

Every stream is a pure function of ``(seed, path_index)``: path ``i`` comes out
bit-identical whether it is generated alone, as a row of a block, or on a
different worker.  Streams are keyed (counter-based Philox), never split, so no
generator state is shared between paths.

Truncation clips each increment to ``[-a_h, a_h]`` with
``a_h = 4 * sqrt(h * log(1/h))``.  For an ``N(0, h)`` draw the clip event has
probability ``2 * Phi(-4 * sqrt(log(1/h)))``, which is below 1e-15 for every
step size used here, so clipping perturbs moments far less than ``h^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TimeGrid",
    "TruncationLevel",
    "IncrementBatch",
    "sample_increments",
    "sample_increment_block",
    "truncation_level",
    "truncate_increments",
    "correlate",
]

Array = np.ndarray

_MAX64 = 2**64


# ---------------------------------------------------------------------------
# grids and levels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0 = t_0 < ... < t_N = horizon`` with ``h = horizon / steps``.

    Parameters
    ----------
    horizon:
        Terminal time ``T > 0``.
    steps:
        Number of steps ``N``.  Must exceed ``horizon`` so that ``h < 1``,
        which every step-size guard and the truncation level require.
    """

    horizon: float
    steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon!r}")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if not self.steps > self.horizon:
            raise ValueError(
                f"steps must exceed horizon so that h < 1; got steps={self.steps}, "
                f"horizon={self.horizon}"
            )

    @property
    def step(self) -> float:
        """Step size ``h = horizon / steps``."""
        return self.horizon / self.steps

    def times(self) -> Array:
        """All ``steps + 1`` grid times ``k * h``."""
        return np.arange(self.steps + 1) * self.step

    def coarsen(self, factor: int) -> "TimeGrid":
        """Grid with the same horizon and ``steps // factor`` steps.

        ``factor`` must divide ``steps`` exactly.
        """
        if not isinstance(factor, int) or factor < 1:
            raise ValueError(f"factor must be a positive integer, got {factor!r}")
        if self.steps % factor != 0:
            raise ValueError(f"factor {factor} does not divide steps {self.steps}")
        return TimeGrid(self.horizon, self.steps // factor)


@dataclass(frozen=True)
class TruncationLevel:
    """Clipping level ``a_h = 4 * sqrt(h * log(1/h))`` for a step size ``h``."""

    step: float
    value: float


def truncation_level(grid: "TimeGrid | float") -> TruncationLevel:
    """Truncation level for a grid or a bare step size.

    Raises
    ------
    ValueError
        If the step size is not in ``(0, 1)``; ``a_h`` is only defined there.
    """
    h = grid.step if isinstance(grid, TimeGrid) else float(grid)
    if not (0.0 < h < 1.0):
        raise ValueError(f"truncation level requires 0 < h < 1, got h={h!r}")
    return TruncationLevel(step=h, value=4.0 * math.sqrt(h * math.log(1.0 / h)))


# ---------------------------------------------------------------------------
# increment streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncrementBatch:
    """One path's Brownian increments on a grid.

    ``values[k]`` approximates ``W_{t_{k+1}} - W_{t_k}`` and has variance
    ``h`` (before any truncation).  The array is marked read-only; derive new
    batches instead of mutating.

    Attributes
    ----------
    truncated_at:
        ``a_h`` if the values have been clipped, else ``None``.
    """

    grid: TimeGrid
    seed: int
    path_index: int
    values: Array
    truncated_at: float | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.steps,):
            raise ValueError(
                f"values must have shape ({self.grid.steps},), got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _validate_stream_id(seed: int, path_index: int) -> None:
    if not isinstance(seed, int) or not 0 <= seed < _MAX64:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    if not isinstance(path_index, int) or not 0 <= path_index < _MAX64:
        raise ValueError(f"path_index must be an integer in [0, 2^64), got {path_index!r}")


def _standard_normals(n: int, seed: int, path_index: int) -> Array:
    # Key, do not split: the (seed, path_index) pair fully determines the stream.
    key = np.array([seed, path_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(n)


def sample_increments(grid: TimeGrid, seed: int, path_index: int) -> IncrementBatch:
    """Gaussian increments ``N(0, h)`` for one path.

    Deterministic in ``(seed, path_index)``: repeated calls return
    bit-identical values.
    """
    _validate_stream_id(seed, path_index)
    values = _standard_normals(grid.steps, seed, path_index) * math.sqrt(grid.step)
    return IncrementBatch(grid=grid, seed=seed, path_index=path_index, values=values)


def sample_increment_block(grid: TimeGrid, seed: int, start: int, count: int) -> Array:
    """Increments for paths ``start, ..., start + count - 1`` as a ``(count, steps)`` array.

    Row ``i`` equals ``sample_increments(grid, seed, start + i).values`` exactly;
    the block is generated path by path, never interleaved.
    """
    _validate_stream_id(seed, start)
    if not isinstance(count, int) or count < 0:
        raise ValueError(f"count must be a nonnegative integer, got {count!r}")
    sqrt_h = math.sqrt(grid.step)
    out = np.empty((count, grid.steps), dtype=np.float64)
    for i in range(count):
        out[i] = _standard_normals(grid.steps, seed, start + i)
    out *= sqrt_h
    return out


def truncate_increments(batch: IncrementBatch) -> IncrementBatch:
    """Clip a batch to ``[-a_h, a_h]``.

    The map is monotone in each coordinate and is the identity on values
    already inside the band.
    """
    level = truncation_level(batch.grid)
    values = np.clip(batch.values, -level.value, level.value)
    return IncrementBatch(
        grid=batch.grid,
        seed=batch.seed,
        path_index=batch.path_index,
        values=values,
        truncated_at=level.value,
    )


def correlate(batch: IncrementBatch, independent: IncrementBatch, rho: float) -> IncrementBatch:
    """Mix two increment streams: ``rho * batch + sqrt(1 - rho^2) * independent``.

    At ``rho = 1`` the output values equal ``batch.values`` exactly and at
    ``rho = 0`` they equal ``independent.values`` exactly (IEEE arithmetic:
    ``1*x = x`` and ``0*x + 1*y = y`` for finite inputs).  The result carries
    the metadata of ``independent``; it is a derived stream, so the
    regeneration contract of :func:`sample_increments` does not apply to it.
    """
    if batch.grid != independent.grid:
        raise ValueError("correlate requires both batches on the same grid")
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho!r}")
    values = rho * batch.values + math.sqrt(1.0 - rho * rho) * independent.values
    return IncrementBatch(
        grid=batch.grid,
        seed=independent.seed,
        path_index=independent.path_index,
        values=values,
    )

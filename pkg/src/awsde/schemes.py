"""Time-stepping schemes for scalar SDEs.

Four steppers share one driver:

- ``explicit_em``: the Euler-Maruyama step ``x + b(t, x) h + sigma(t, x) dW``.
- ``semi_implicit_em``: drift implicit, diffusion explicit; the step solves
  ``z - h b(t, z) = x + sigma(t, x) dW``.  Under a one-sided Lipschitz drift
  with ``h < 1/L`` the map ``z -> z - h b(t, z)`` is strictly increasing, so
  the root is unique.
- ``transformed_semi_implicit``: the semi-implicit step applied to the
  transformed coefficients and conjugated back, ``G^{-1} o (id - h btilde)^{-1}
  o (id + dW sigmatilde) o G``.  With the ``monotone`` flag the increments are
  truncated at ``a_h``, and whenever additionally ``1 - L_sigmatilde a_h > 0``
  the whole step is nondecreasing in the state, uniformly over increments.
- ``symmetrised_em``: ``|x + kappa (eta - x) h + gamma sqrt(x) dW|`` for the
  square-root diffusion family; keeps paths nonnegative.

Step-size guards (``h < 1/L`` for the implicit drift solve and
``1 - L_sigmatilde a_h > 0`` for the monotone variant) are checked against the
declared constants when a config meets a grid.  ``guard_policy="strict"``
raises; ``guard_policy="warn"`` proceeds and lets callers record the violation
messages from :func:`guard_report`.  The implicit solve itself is a
safeguarded bisection and returns a deterministic root even when the guard
fails and the map is not monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BracketError, ConfigurationError, StepSizeError
from .models import CoefficientSpec
from .randomness import (
    IncrementBatch,
    TimeGrid,
    sample_increment_block,
    sample_increments,
    truncation_level,
)
from .transform import TransformedCoefficients, transformed_coefficients

__all__ = [
    "SCHEME_KINDS",
    "SCHEME_ALIASES",
    "StepperConfig",
    "DiscretePath",
    "config_from_alias",
    "guard_report",
    "em_step",
    "implicit_solve",
    "semi_implicit_em_step",
    "transformed_step",
    "symmetrised_em_step",
    "simulate_path",
    "simulate_path_block",
    "simulate_coupled",
    "simulate_coupled_block",
]

Array = np.ndarray

SCHEME_KINDS = (
    "explicit_em",
    "semi_implicit_em",
    "transformed_semi_implicit",
    "symmetrised_em",
)

# Short names accepted by the command line.
SCHEME_ALIASES: Mapping[str, tuple[str, bool]] = {
    "em": ("explicit_em", False),
    "iem": ("semi_implicit_em", False),
    "tiem": ("transformed_semi_implicit", False),
    "tiem-mono": ("transformed_semi_implicit", True),
    "sym-em": ("symmetrised_em", False),
}

_RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepperConfig:
    """A scheme kind bound to a coefficient spec.

    For the transformed kind the transformed coefficients are built eagerly
    (including their declared-constant probe cross-check).  ``monotone`` is
    only valid for the transformed kind and switches on increment truncation.
    """

    kind: str
    spec: CoefficientSpec
    monotone: bool = False
    guard_policy: str = "strict"
    transformed: TransformedCoefficients | None = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ConfigurationError(f"unknown scheme kind {self.kind!r}; expected {SCHEME_KINDS}")
        if self.guard_policy not in ("strict", "warn"):
            raise ConfigurationError(
                f"guard_policy must be 'strict' or 'warn', got {self.guard_policy!r}"
            )
        if self.monotone and self.kind != "transformed_semi_implicit":
            raise ConfigurationError("monotone=True is only valid for the transformed scheme")
        if self.kind == "transformed_semi_implicit" and self.transformed is None:
            object.__setattr__(self, "transformed", transformed_coefficients(self.spec))
        if self.kind == "semi_implicit_em" and self.spec.one_sided_lipschitz_bound is None:
            raise ConfigurationError(
                "semi_implicit_em requires one_sided_lipschitz_bound on the spec"
            )
        if self.kind == "symmetrised_em":
            missing = {"kappa", "eta", "gamma"} - set(self.spec.params)
            if missing:
                raise ConfigurationError(
                    f"symmetrised_em requires params kappa, eta, gamma; missing {sorted(missing)}"
                )


def config_from_alias(alias: str, spec: CoefficientSpec,
                      guard_policy: str = "strict") -> StepperConfig:
    """Build a :class:`StepperConfig` from a short scheme name (em, iem, ...)."""
    try:
        kind, monotone = SCHEME_ALIASES[alias]
    except KeyError:
        raise ConfigurationError(
            f"unknown scheme {alias!r}; expected one of {sorted(SCHEME_ALIASES)}"
        ) from None
    return StepperConfig(kind=kind, spec=spec, monotone=monotone, guard_policy=guard_policy)


@dataclass(frozen=True)
class DiscretePath:
    """One simulated path: ``values[k]`` approximates the state at ``k h``."""

    grid: TimeGrid
    values: Array
    scheme: str
    path_index: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.steps + 1,):
            raise ValueError(
                f"values must have shape ({self.grid.steps + 1},), got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def guard_report(config: StepperConfig, grid: TimeGrid) -> tuple[str, ...]:
    """Step-size guard violations of ``config`` on ``grid`` (empty if none)."""
    h = grid.step
    messages: list[str] = []
    if config.kind == "semi_implicit_em":
        bound = config.spec.one_sided_lipschitz_bound
        if bound is not None and bound > 0.0 and h >= 1.0 / bound:
            messages.append(
                f"step size h={h!r} violates h < 1/L with one-sided drift bound L={bound}"
            )
    elif config.kind == "transformed_semi_implicit":
        assert config.transformed is not None
        l_drift = config.transformed.one_sided_bound
        if l_drift > 0.0 and h >= 1.0 / l_drift:
            messages.append(
                f"step size h={h!r} violates h < 1/L with transformed drift bound L={l_drift}"
            )
        if config.monotone:
            l_diff = config.transformed.lipschitz_bound
            a_h = truncation_level(grid).value
            if l_diff > 0.0 and 1.0 - l_diff * a_h <= 0.0:
                messages.append(
                    f"monotone guard 1 - L*a_h > 0 fails: L={l_diff}, a_h={a_h!r} at h={h!r}"
                )
    return tuple(messages)


def _enforce_guards(config: StepperConfig, grid: TimeGrid) -> tuple[str, ...]:
    messages = guard_report(config, grid)
    if messages and config.guard_policy == "strict":
        raise StepSizeError("; ".join(messages))
    return messages


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def em_step(spec: CoefficientSpec, t: float, x: "Array | float", h: float,
            dw: "Array | float") -> "Array | float":
    """Explicit Euler-Maruyama step."""
    xs = np.asarray(x, dtype=float)
    out = xs + np.asarray(spec.drift(t, xs)) * h + np.asarray(spec.diffusion(t, xs)) * dw
    return out if np.ndim(x) else float(out)


def implicit_solve(
    y: "Array | float",
    drift: Callable[["Array | float"], "Array | float"],
    h: float,
    one_sided_bound: "float | None" = None,
) -> "Array | float":
    """Solve ``z - h * drift(z) = y`` by a bracketed secant iteration.

    The initial bracket is ``[y - |h drift(y)| - 1, y + |h drift(y)| + 1]``,
    expanded geometrically until it straddles the target.  Inside the bracket
    an Illinois-damped regula falsi runs until
    ``|z - h drift(z) - y| <= 1e-12 (1 + |y|)``; the bracket never opens, so
    convergence is global.  Each element of a vector call is solved
    independently of the others, so batching does not change results.

    If ``one_sided_bound`` is given and positive, ``h >= 1/one_sided_bound``
    raises :class:`StepSizeError`; pass ``None`` when a caller enforces the
    guard itself.  Without monotonicity the iteration still converges to a
    deterministic root.
    """
    ys = np.asarray(y, dtype=float)
    if one_sided_bound is not None and one_sided_bound > 0.0 and h >= 1.0 / one_sided_bound:
        raise StepSizeError(
            f"implicit drift solve requires h < 1/L; got h={h!r}, L={one_sided_bound}"
        )

    def g(z: Array) -> Array:
        return z - h * np.asarray(drift(z))

    push = h * np.asarray(drift(ys))
    tol = _RESIDUAL_RTOL * (1.0 + np.abs(ys))
    if np.all(np.abs(push) <= tol):
        # already a root at the explicit value; in particular a zero drift
        # returns y bit-exactly
        return ys if np.ndim(y) else float(ys)

    pad = np.abs(push) + 1.0
    lo = ys - pad
    hi = ys + pad

    width = np.ones_like(ys)
    need = g(lo) > ys
    for _ in range(64):
        if not need.any():
            break
        lo = np.where(need, lo - width, lo)
        width = np.where(need, 2.0 * width, width)
        need = need & (g(lo) > ys)
    if need.any():
        raise BracketError("lower bracket expansion failed; drift may not be one-sided Lipschitz")

    width = np.ones_like(ys)
    need = g(hi) < ys
    for _ in range(64):
        if not need.any():
            break
        hi = np.where(need, hi + width, hi)
        width = np.where(need, 2.0 * width, width)
        need = need & (g(hi) < ys)
    if need.any():
        raise BracketError("upper bracket expansion failed; drift may not be one-sided Lipschitz")

    flo = g(lo) - ys
    fhi = g(hi) - ys
    # elements already converged at the explicit value keep it bit-exactly,
    # matching what a scalar call on them alone would return
    z = np.where(np.abs(push) <= tol, ys, 0.5 * (lo + hi))
    res = g(z) - ys
    active = np.abs(res) > tol
    # side tracks which endpoint the last accepted point replaced; replacing
    # the same endpoint twice in a row halves the opposite residual (Illinois
    # damping), which prevents regula falsi from stalling on one side.
    side = np.zeros(ys.shape, dtype=np.int8)
    for _ in range(300):
        if not active.any():
            break
        neg = res < 0.0
        fhi = np.where(active & neg & (side == -1), 0.5 * fhi, fhi)
        flo = np.where(active & ~neg & (side == 1), 0.5 * flo, flo)
        lo = np.where(active & neg, z, lo)
        flo = np.where(active & neg, res, flo)
        hi = np.where(active & ~neg, z, hi)
        fhi = np.where(active & ~neg, res, fhi)
        side = np.where(active, np.where(neg, -1, 1).astype(np.int8), side)
        denom = fhi - flo
        secant = (lo * fhi - hi * flo) / np.where(denom == 0.0, 1.0, denom)
        cand = np.where(denom == 0.0, 0.5 * (lo + hi), secant)
        cand = np.minimum(np.maximum(cand, np.minimum(lo, hi)), np.maximum(lo, hi))
        z = np.where(active, cand, z)
        res = np.where(active, g(z) - ys, res)
        active = np.abs(res) > tol
    if active.any():
        raise BracketError("implicit drift solve did not reach the residual tolerance")

    return z if np.ndim(y) else float(z)


def semi_implicit_em_step(spec: CoefficientSpec, t: float, x: "Array | float", h: float,
                          dw: "Array | float",
                          enforce_guard: bool = True) -> "Array | float":
    """Drift-implicit Euler step: diffusion at ``x``, drift at the new state."""
    xs = np.asarray(x, dtype=float)
    y = xs + np.asarray(spec.diffusion(t, xs)) * dw
    bound = spec.one_sided_lipschitz_bound if enforce_guard else None
    z = implicit_solve(y, lambda v: spec.drift(t, v), h, one_sided_bound=bound)
    return z if np.ndim(x) else float(z)


def transformed_step(tc: TransformedCoefficients, x: "Array | float", h: float,
                     dw: "Array | float",
                     enforce_guard: bool = True) -> "Array | float":
    """One transformed semi-implicit step.

    Composition ``G^{-1}((id - h btilde)^{-1}(G(x) + sigmatilde(G(x)) dW))``.
    Truncating ``dw`` is the caller's responsibility (the simulation driver
    truncates when the config's ``monotone`` flag is set).
    """
    z = np.asarray(tc.transform.g(x), dtype=float)
    y = z + np.asarray(tc.diffusion(z)) * dw
    bound = tc.one_sided_bound if enforce_guard else None
    z_new = implicit_solve(y, tc.drift, h, one_sided_bound=bound)
    out = tc.transform.inverse(z_new)
    return out if np.ndim(x) else float(out)


def symmetrised_em_step(kappa: float, eta: float, gamma: float, x: "Array | float",
                        h: float, dw: "Array | float") -> "Array | float":
    """Reflected Euler step for ``dX = kappa (eta - X) dt + gamma sqrt(X) dW``."""
    xs = np.asarray(x, dtype=float)
    out = np.abs(xs + kappa * (eta - xs) * h + gamma * np.sqrt(np.maximum(xs, 0.0)) * dw)
    return out if np.ndim(x) else float(out)


# ---------------------------------------------------------------------------
# path simulation
# ---------------------------------------------------------------------------


def _step_matrix(config: StepperConfig, grid: TimeGrid, raw_dw: Array) -> Array:
    """Step a ``(paths, steps)`` increment matrix to a ``(paths, steps+1)`` state matrix.

    ``raw_dw`` holds untruncated increments; the monotone variant clips them
    at the truncation level of ``grid`` here, so coupled coarse grids truncate
    at their own level.
    """
    h = grid.step
    n = grid.steps
    spec = config.spec
    dw = raw_dw
    if config.monotone:
        a_h = truncation_level(grid).value
        dw = np.clip(raw_dw, -a_h, a_h)

    paths = raw_dw.shape[0]
    values = np.empty((paths, n + 1), dtype=np.float64)
    values[:, 0] = spec.initial_value
    x = values[:, 0].copy()

    with np.errstate(over="ignore", invalid="ignore"):
        if config.kind == "explicit_em":
            for k in range(n):
                t = k * h
                x = x + np.asarray(spec.drift(t, x)) * h + np.asarray(spec.diffusion(t, x)) * dw[:, k]
                values[:, k + 1] = x
        elif config.kind == "semi_implicit_em":
            for k in range(n):
                t = k * h
                y = x + np.asarray(spec.diffusion(t, x)) * dw[:, k]
                x = implicit_solve(y, lambda v: spec.drift(t, v), h, one_sided_bound=None)
                values[:, k + 1] = x
        elif config.kind == "transformed_semi_implicit":
            tc = config.transformed
            assert tc is not None
            for k in range(n):
                x = np.asarray(transformed_step(tc, x, h, dw[:, k], enforce_guard=False))
                values[:, k + 1] = x
        elif config.kind == "symmetrised_em":
            kappa = config.spec.params["kappa"]
            eta = config.spec.params["eta"]
            gamma = config.spec.params["gamma"]
            for k in range(n):
                x = np.asarray(symmetrised_em_step(kappa, eta, gamma, x, h, dw[:, k]))
                values[:, k + 1] = x
    return values


def simulate_path(config: StepperConfig, increments: IncrementBatch) -> DiscretePath:
    """Simulate one path driven by ``increments``.

    ``increments`` must be untruncated; the monotone variant truncates
    internally.  Guard violations raise in strict mode.
    """
    _enforce_guards(config, increments.grid)
    if increments.truncated_at is not None:
        raise ConfigurationError(
            "pass untruncated increments; the monotone variant truncates internally"
        )
    values = _step_matrix(config, increments.grid, increments.values[None, :])[0]
    return DiscretePath(grid=increments.grid, values=values, scheme=config.kind,
                        path_index=increments.path_index)


def simulate_path_block(config: StepperConfig, grid: TimeGrid, seed: int,
                        start: int, count: int) -> Array:
    """States for paths ``start .. start+count-1`` as a ``(count, steps+1)`` array.

    Row ``i`` equals ``simulate_path(config, sample_increments(grid, seed,
    start + i)).values`` bit for bit.
    """
    _enforce_guards(config, grid)
    raw = sample_increment_block(grid, seed, start, count)
    return _step_matrix(config, grid, raw)


def _coarse_sums(raw_fine: Array, factor: int) -> Array:
    # differences of the fine prefix sums rather than blockwise sums: the
    # coarse increments then retrace the fine path's own left-to-right
    # accumulation, so a driftless unit-diffusion path agrees bitwise at
    # shared nodes
    if factor == 1:
        return raw_fine
    paths, n_fine = raw_fine.shape
    nodes = np.cumsum(raw_fine, axis=1)[:, factor - 1 :: factor]
    out = np.empty_like(nodes)
    out[:, 0] = nodes[:, 0]
    np.subtract(nodes[:, 1:], nodes[:, :-1], out=out[:, 1:])
    return out


def simulate_coupled(config: StepperConfig, fine_grid: TimeGrid,
                     factors: Sequence[int], seed: int,
                     path_index: int) -> dict[int, DiscretePath]:
    """Paths on nested grids driven by one Brownian stream.

    For each coarsening factor the increments are consecutive differences of
    the fine prefix sums, so all returned paths are couplings of the same
    noise and a driftless unit-diffusion path agrees with the fine path at
    shared nodes bitwise.  Factor 1 returns the fine path itself.  Every
    factor must divide the fine step count.
    """
    _enforce_guards(config, fine_grid)
    for f in factors:
        fine_grid.coarsen(f)  # validates divisibility
    raw = sample_increments(fine_grid, seed, path_index).values[None, :]
    out: dict[int, DiscretePath] = {}
    for f in dict.fromkeys(factors):
        grid_c = fine_grid.coarsen(f)
        _enforce_guards(config, grid_c)
        values = _step_matrix(config, grid_c, _coarse_sums(raw, f))[0]
        out[f] = DiscretePath(grid=grid_c, values=values, scheme=config.kind,
                              path_index=path_index)
    return out


def simulate_coupled_block(config: StepperConfig, fine_grid: TimeGrid,
                           factors: Sequence[int], seed: int, start: int,
                           count: int) -> dict[int, Array]:
    """Block version of :func:`simulate_coupled`: factor -> (count, N/factor + 1)."""
    _enforce_guards(config, fine_grid)
    for f in factors:
        fine_grid.coarsen(f)
    raw = sample_increment_block(fine_grid, seed, start, count)
    out: dict[int, Array] = {}
    for f in dict.fromkeys(factors):
        grid_c = fine_grid.coarsen(f)
        _enforce_guards(config, grid_c)
        out[f] = _step_matrix(config, grid_c, _coarse_sums(raw, f))
    return out

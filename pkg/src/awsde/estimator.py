"""Monte Carlo estimation of adapted distances between scalar SDE laws.

The adapted (bicausal) transport value between two SDE laws is attained by the
synchronous coupling: drive both equations with the same Brownian motion and
integrate the stage cost along the pair.  The estimator therefore simulates
both legs from identical increment streams and averages the h-weighted Riemann
sum ``h * sum_{k=0..N} c(t_k, X_k, Y_k)`` over paths; for the power cost this
estimates the p-th power of the adapted distance.

Also here: the strong-error convergence harness (coupled coarse/fine grids
against a fine-step reference), empirical sup-moment tables, and the search
for a one-step monotonicity counterexample of the truncated scheme when the
diffusion is not Lipschitz.

All estimates are deterministic functions of ``(seed, path count)``: paths are
processed in fixed 256-path blocks writing to disjoint slices, and reductions
run in block order after all blocks finish, so the worker count never changes
a single bit of the output.
"""

from __future__ import annotations

import csv
import math
import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import AssumptionError, ConfigurationError, StepSizeError
from .models import CoefficientSpec
from .randomness import TimeGrid, truncation_level
from .schemes import (
    StepperConfig,
    config_from_alias,
    guard_report,
    simulate_coupled_block,
    simulate_path_block,
)

__all__ = [
    "BLOCK_PATHS",
    "EstimateResult",
    "RateCurve",
    "SlopeFit",
    "MomentRow",
    "MonotonicityWitness",
    "power_time_cost",
    "estimate_vc",
    "estimate_aw",
    "strong_error_curve",
    "moment_diagnostic",
    "one_step_cdf",
    "monotonicity_witness",
    "write_aw_estimates_csv",
    "write_rate_curve_csv",
    "write_moments_csv",
]

Array = np.ndarray

#: paths per work unit; estimates never depend on how blocks are scheduled
BLOCK_PATHS = 256

#: regularity classes for which the synchronous coupling attains the value
COVERED_CLASSES = ("lipschitz", "growth_disc", "regular", "zvonkin")

#: errors below this are rounding noise of the coupled simulation, not signal
FIT_FLOOR = 1e-13


def power_time_cost(p: float) -> Callable[[Array, Array, Array], Array]:
    """Vectorised stage cost ``c(t, x, y) = |x - y|^p``."""
    if not p >= 1:
        raise ConfigurationError(f"power cost needs p >= 1, got {p}")

    def cost(t: Array, x: Array, y: Array) -> Array:
        return np.abs(x - y) ** p

    return cost


@dataclass(frozen=True, eq=False)
class EstimateResult:
    """A Monte Carlo estimate with its sampling error.

    ``stderr`` is the sample standard deviation over per-path integrals
    divided by ``sqrt(paths)`` (``nan`` for a single path).  ``extra`` carries
    scheme names, the seed, and any optimality caveats.
    """

    estimate: float
    stderr: float
    paths: int
    grid: TimeGrid
    extra: Mapping[str, object] = field(default_factory=dict)


def _run_blocks(paths: int, workers: int, work: Callable[[int, int, int], None]) -> int:
    """Run ``work(block_index, start, count)`` over all path blocks."""
    blocks = [
        (b, start, min(BLOCK_PATHS, paths - start))
        for b, start in enumerate(range(0, paths, BLOCK_PATHS))
    ]
    if workers <= 1 or len(blocks) == 1:
        for b in blocks:
            work(*b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # Each block writes a disjoint slice of preallocated arrays, so
            # scheduling order cannot influence the result.
            list(pool.map(lambda args: work(*args), blocks))
    return len(blocks)


def _coverage_notes(*specs: CoefficientSpec) -> list[str]:
    notes: list[str] = []
    for spec in specs:
        if spec.regularity_class not in COVERED_CLASSES:
            notes.append(
                f"model {spec.name!r}: regularity class {spec.regularity_class!r} is not "
                "covered by the synchronous-coupling result; optimality not certified"
            )
        for message in spec.warnings:
            notes.append(f"model {spec.name!r}: {message}; optimality not certified")
    for message in notes:
        _warnings.warn(message, RuntimeWarning, stacklevel=3)
    return notes


def estimate_vc(
    spec_mu: CoefficientSpec,
    spec_nu: CoefficientSpec,
    schemes: "tuple[StepperConfig, StepperConfig]",
    cost: Callable[[Array, Array, Array], Array],
    grid: TimeGrid,
    paths: int,
    seed: int,
    workers: int = 1,
) -> EstimateResult:
    """Estimate the synchronous-coupling transport value between two SDE laws.

    Both legs of every sample are driven by the same increment stream (the
    synchronous coupling); each path contributes ``h * sum_k c(t_k, X_k,
    Y_k)`` over all ``steps + 1`` grid nodes, the uniform-weight discretisation
    of the time integral of the stage cost.

    ``cost`` must be vectorised over ``(t, x, y)`` arrays.  Identical specs
    with identical schemes give exactly zero with zero variance.
    """
    config_mu, config_nu = schemes
    if config_mu.spec is not spec_mu or config_nu.spec is not spec_nu:
        raise ConfigurationError(
            "each scheme config must wrap the coefficient spec of its own leg"
        )
    if not isinstance(paths, int) or paths < 1:
        raise ConfigurationError(f"paths must be a positive integer, got {paths!r}")
    notes = _coverage_notes(spec_mu, spec_nu)
    guard_notes = tuple(
        dict.fromkeys(guard_report(config_mu, grid) + guard_report(config_nu, grid))
    )

    t_row = grid.times()[None, :]
    h = grid.step
    per_path = np.empty(paths, dtype=np.float64)

    def work(_b: int, start: int, count: int) -> None:
        x = simulate_path_block(config_mu, grid, seed, start, count)
        y = simulate_path_block(config_nu, grid, seed, start, count)
        c = np.asarray(cost(t_row, x, y), dtype=np.float64)
        per_path[start:start + count] = h * c.sum(axis=1)

    _run_blocks(paths, workers, work)
    estimate = float(np.mean(per_path))
    stderr = float(np.std(per_path, ddof=1) / math.sqrt(paths)) if paths > 1 else float("nan")
    extra = {
        "seed": seed,
        "schemes": (config_mu.kind, config_nu.kind),
        "warnings": tuple(notes),
        "guard_warnings": guard_notes,
    }
    return EstimateResult(estimate=estimate, stderr=stderr, paths=paths, grid=grid, extra=extra)


def estimate_aw(
    spec_mu: CoefficientSpec,
    spec_nu: CoefficientSpec,
    schemes: "tuple[StepperConfig, StepperConfig]",
    p: float,
    grid: TimeGrid,
    paths: int,
    seed: int,
    workers: int = 1,
) -> EstimateResult:
    """Adapted distance estimate under the stagewise power cost.

    ``estimate`` (and ``stderr``) refer to the p-th power of the distance,
    which is what the Monte Carlo sum targets; ``extra["aw"]`` holds the p-th
    root of the point estimate.
    """
    result = estimate_vc(
        spec_mu, spec_nu, schemes, power_time_cost(p), grid, paths, seed, workers=workers
    )
    extra = dict(result.extra)
    extra["p"] = float(p)
    extra["aw"] = result.estimate ** (1.0 / float(p)) if result.estimate > 0.0 else 0.0
    return EstimateResult(
        estimate=result.estimate,
        stderr=result.stderr,
        paths=result.paths,
        grid=result.grid,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# strong-error convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of ``log error`` against ``log h``.

    The full fit uses every point.  If the largest-h residual exceeds three
    times the full fit's RMS, that point is treated as pre-asymptotic and the
    headline ``slope`` comes from the refit without it; both fits are kept.
    A residual can only clear that bar on curves of ten or more points (it is
    capped at sqrt(n) RMS), so short diagnostic curves always keep every
    point.
    """

    slope: float
    intercept: float
    residual_rms: float
    full_slope: float
    full_intercept: float
    full_residual_rms: float
    dropped_largest_h: bool


@dataclass(frozen=True, eq=False)
class RateCurve:
    """Strong errors against a fine-step reference, per step size.

    ``err_sup[i]`` is ``max_k E[|X^ref_{t_k} - X^h_{t_k}|^p]^(1/p)`` over the
    coarse grid nodes; ``err_int[i]`` is the time-integrated counterpart
    ``E[int_0^T |X^ref_t - X^h_{floor(t)}|^p dt]^(1/p)`` with the coarse path
    held constant between its nodes and the reference read at its own
    resolution.  ``stderr[i]`` is the sampling error of the integrated p-th
    power mean (before the root).

    ``fit`` is the headline slope, fitted to the larger of the two norms at
    each step size (the quantity the rate guarantee bounds); ``fit_sup`` and
    ``fit_int`` fit each norm separately.  A norm can decay faster than the
    guarantee (additive noise shows first order at the nodes), so only the
    combined fit tracks the guaranteed rate.
    """

    h_values: tuple[float, ...]
    err_sup: tuple[float, ...]
    err_int: tuple[float, ...]
    stderr: tuple[float, ...]
    p: float
    paths: int
    fit: "SlopeFit | None"
    fit_sup: "SlopeFit | None"
    fit_int: "SlopeFit | None"
    guard_warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if list(self.h_values) != sorted(set(self.h_values), reverse=True):
            raise ConfigurationError("h_values must be strictly decreasing")


def _fit_loglog(h_values: Sequence[float], errors: Sequence[float]) -> "SlopeFit | None":
    if len(errors) < 2 or any(not (e > FIT_FLOOR) or not math.isfinite(e) for e in errors):
        return None
    lx = np.log(np.asarray(h_values, dtype=np.float64))
    ly = np.log(np.asarray(errors, dtype=np.float64))
    full_slope, full_intercept = np.polyfit(lx, ly, 1)
    residuals = ly - (full_slope * lx + full_intercept)
    full_rms = float(np.sqrt(np.mean(residuals**2)))
    slope, intercept, rms = full_slope, full_intercept, full_rms
    dropped = False
    # h_values are decreasing, so index 0 is the largest step.
    if len(errors) >= 3 and full_rms > 0.0 and abs(residuals[0]) > 3.0 * full_rms:
        dropped = True
        slope, intercept = np.polyfit(lx[1:], ly[1:], 1)
        trimmed = ly[1:] - (slope * lx[1:] + intercept)
        rms = float(np.sqrt(np.mean(trimmed**2)))
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(rms),
        full_slope=float(full_slope),
        full_intercept=float(full_intercept),
        full_residual_rms=full_rms,
        dropped_largest_h=dropped,
    )


def _steps_for(horizon: float, h: float) -> int:
    steps = horizon / h
    rounded = round(steps)
    if rounded < 1 or abs(steps - rounded) > 1e-9 * max(1.0, rounded):
        raise ConfigurationError(f"step size {h!r} does not divide the horizon {horizon!r}")
    return int(rounded)


def strong_error_curve(
    spec: CoefficientSpec,
    scheme: "str | StepperConfig",
    p: float,
    h_values: Sequence[float],
    h_ref: float,
    paths: int,
    seed: int,
    *,
    horizon: float = 1.0,
    guard_policy: str = "strict",
    workers: int = 1,
) -> RateCurve:
    """Strong errors of a scheme against its own fine-step reference.

    For every requested ``h`` the scheme runs on the coarsened grid driven by
    block sums of the reference increments, so each coarse path is coupled to
    the ``h_ref`` reference path; ``h_ref`` must divide every ``h``.  Errors
    are reported in the sup-over-nodes and time-integrated p-norms, with
    log-log slope fits for their pointwise maximum and for each norm alone
    (skipped when an error sits at the rounding floor).
    """
    if not p >= 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    if not isinstance(paths, int) or paths < 2:
        raise ConfigurationError(f"paths must be an integer >= 2, got {paths!r}")
    hs = tuple(sorted({float(h) for h in h_values}, reverse=True))
    if len(hs) != len(tuple(h_values)):
        raise ConfigurationError("h_values must not contain duplicates")
    if isinstance(scheme, str):
        config = config_from_alias(scheme, spec, guard_policy=guard_policy)
    else:
        config = scheme

    ref_steps = _steps_for(horizon, h_ref)
    fine = TimeGrid(horizon=horizon, steps=ref_steps)
    factors: list[int] = []
    for h in hs:
        ratio = h / h_ref
        factor = round(ratio)
        if factor < 1 or abs(ratio - factor) > 1e-9 * factor:
            raise ConfigurationError(f"h_ref={h_ref!r} does not divide h={h!r}")
        if ref_steps % factor != 0:
            raise ConfigurationError(f"factor {factor} does not divide {ref_steps} steps")
        factors.append(int(factor))

    guard_notes: list[str] = []
    for factor in [1] + factors:
        guard_notes.extend(guard_report(config, fine.coarsen(factor)))
    guard_notes = list(dict.fromkeys(guard_notes))
    if guard_notes and config.guard_policy == "strict":
        raise StepSizeError("; ".join(guard_notes))

    n_blocks = -(-paths // BLOCK_PATHS)
    sup_partials = [np.zeros((n_blocks, ref_steps // f + 1), dtype=np.float64) for f in factors]
    int_scalars = [np.empty(paths, dtype=np.float64) for _ in factors]

    def work(b: int, start: int, count: int) -> None:
        out = simulate_coupled_block(config, fine, [1] + factors, seed, start, count)
        ref = out[1]
        for i, f in enumerate(factors):
            coarse = out[f]
            diff_nodes = np.abs(ref[:, ::f] - coarse) ** p
            sup_partials[i][b, :] = diff_nodes.sum(axis=0)
            held = np.repeat(coarse[:, :-1], f, axis=1)
            diff_time = np.abs(ref[:, :-1] - held) ** p
            int_scalars[i][start:start + count] = h_ref * diff_time.sum(axis=1)

    _run_blocks(paths, workers, work)

    err_sup: list[float] = []
    err_int: list[float] = []
    stderr: list[float] = []
    for i in range(len(factors)):
        node_means = sup_partials[i].sum(axis=0) / paths
        err_sup.append(float(np.max(node_means) ** (1.0 / p)))
        scalars = int_scalars[i]
        err_int.append(float(np.mean(scalars) ** (1.0 / p)))
        stderr.append(float(np.std(scalars, ddof=1) / math.sqrt(paths)))

    err_max = [max(s, t) for s, t in zip(err_sup, err_int)]
    return RateCurve(
        h_values=hs,
        err_sup=tuple(err_sup),
        err_int=tuple(err_int),
        stderr=tuple(stderr),
        p=float(p),
        paths=paths,
        fit=_fit_loglog(hs, err_max),
        fit_sup=_fit_loglog(hs, err_sup),
        fit_int=_fit_loglog(hs, err_int),
        guard_warnings=tuple(guard_notes),
    )


# ---------------------------------------------------------------------------
# moment diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentRow:
    """Empirical ``E[max_k |X^h_{t_k}|^p]`` for one step size."""

    h: float
    p: float
    sup_moment: float


def moment_diagnostic(
    spec: CoefficientSpec,
    scheme: "str | StepperConfig",
    p: float,
    h_values: Sequence[float],
    paths: int,
    seed: int,
    *,
    horizon: float = 1.0,
    guard_policy: str = "strict",
    workers: int = 1,
) -> tuple[MomentRow, ...]:
    """Empirical sup-moments of a scheme across step sizes.

    Divergent paths (overflow to nan or inf) count as infinite, so a blowing-up
    scheme reports an infinite sup-moment rather than hiding behind nan.
    """
    if not p >= 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    if isinstance(scheme, str):
        config = config_from_alias(scheme, spec, guard_policy=guard_policy)
    else:
        config = scheme
    rows: list[MomentRow] = []
    for h in h_values:
        grid = TimeGrid(horizon=horizon, steps=_steps_for(horizon, float(h)))
        per_path = np.empty(paths, dtype=np.float64)

        def work(_b: int, start: int, count: int, grid: TimeGrid = grid,
                 per_path: Array = per_path) -> None:
            x = simulate_path_block(config, grid, seed, start, count)
            with np.errstate(over="ignore", invalid="ignore"):
                m = np.max(np.abs(x), axis=1) ** p
            per_path[start:start + count] = np.where(np.isnan(m), np.inf, m)

        _run_blocks(paths, workers, work)
        rows.append(MomentRow(h=float(h), p=float(p), sup_moment=float(np.mean(per_path))))
    return tuple(rows)


# ---------------------------------------------------------------------------
# one-step monotonicity counterexample
# ---------------------------------------------------------------------------


def one_step_cdf(sigma: Callable[[float], float], h: float, z: float, a: float) -> float:
    """CDF at ``a`` of one truncated step ``z + sigma(z) * clip(dW, a_h)``.

    Zero below ``z - a_h sigma(z)``, one at and above ``z + a_h sigma(z)``,
    and the Gaussian CDF ``Phi((a - z) / (sigma(z) sqrt(h)))`` in between
    (the clipped mass sits exactly on the band edges).
    """
    s = float(sigma(z))
    if not s > 0.0:
        raise AssumptionError(f"diffusion must be positive, got sigma({z}) = {s}")
    a_h = truncation_level(float(h)).value
    if a < z - a_h * s:
        return 0.0
    if a >= z + a_h * s:
        return 1.0
    u = (a - z) / (s * math.sqrt(h))
    return 0.5 * (1.0 + math.erf(u / math.sqrt(2.0)))


@dataclass(frozen=True)
class MonotonicityWitness:
    """Two starting points whose one-step kernels are not stochastically ordered.

    ``cdf_at_lower`` and ``cdf_at_upper`` hold ``(F_z, F_z_bar)`` evaluated at
    ``a_lower`` and ``a_upper``; the two pairs are strictly ordered in
    opposite directions, so neither kernel dominates the other.
    """

    z: float
    z_bar: float
    a_lower: float
    a_upper: float
    cdf_at_lower: tuple[float, float]
    cdf_at_upper: tuple[float, float]
    step: float
    truncation: float


def monotonicity_witness(
    sigma: Callable[[float], float],
    h: float,
    interval: tuple[float, float] = (0.0, 1.0),
    points: int = 201,
) -> "MonotonicityWitness | None":
    """Search for a one-step monotonicity failure of the truncated scheme.

    A pair ``z < z_bar`` with ``|sigma(z_bar) - sigma(z)| * a_h > z_bar - z``
    makes the two truncation bands overhang each other, so the one-step
    kernels cross in both directions; the grid search maximises that margin
    and the returned thresholds are verified against :func:`one_step_cdf`.
    Returns ``None`` when no grid pair violates the bound (as for any
    diffusion that is ``1/a_h``-Lipschitz on the interval).
    """
    if points < 2:
        raise ConfigurationError(f"points must be >= 2, got {points}")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ConfigurationError(f"interval must be increasing, got {interval!r}")
    a_h = truncation_level(float(h)).value
    zs = np.linspace(lo, hi, points)
    sigmas = np.empty(points, dtype=np.float64)
    for i, z in enumerate(zs):
        sigmas[i] = float(sigma(float(z)))
        if not sigmas[i] > 0.0:
            raise AssumptionError(f"diffusion must be positive, got sigma({z}) = {sigmas[i]}")

    best: "tuple[int, int] | None" = None
    best_margin = 0.0
    for i in range(points):
        for j in range(i + 1, points):
            margin = abs(sigmas[j] - sigmas[i]) * a_h - (zs[j] - zs[i])
            if margin > best_margin:
                best_margin = margin
                best = (i, j)
    if best is None:
        return None

    i, j = best
    z, z_bar = float(zs[i]), float(zs[j])
    s_low, s_high = float(sigmas[i]), float(sigmas[j])
    if s_high > s_low:
        # Wider band above: its lower edge undercuts the lower state's band.
        a_lower = 0.5 * ((z_bar - a_h * s_high) + (z - a_h * s_low))
        a_upper = z + a_h * s_low
    else:
        # Narrower band above: its upper edge stops short of the lower state's.
        a_lower = 0.5 * ((z - a_h * s_low) + (z_bar - a_h * s_high))
        a_upper = z_bar + a_h * s_high

    cdf_at_lower = (one_step_cdf(sigma, h, z, a_lower), one_step_cdf(sigma, h, z_bar, a_lower))
    cdf_at_upper = (one_step_cdf(sigma, h, z, a_upper), one_step_cdf(sigma, h, z_bar, a_upper))
    crossed = (
        (cdf_at_lower[0] < cdf_at_lower[1] and cdf_at_upper[0] > cdf_at_upper[1])
        or (cdf_at_lower[0] > cdf_at_lower[1] and cdf_at_upper[0] < cdf_at_upper[1])
    )
    if not crossed:
        raise AssumptionError(
            "violating pair found but CDF crossings failed verification; "
            f"z={z}, z_bar={z_bar}, a_lower={a_lower}, a_upper={a_upper}"
        )
    return MonotonicityWitness(
        z=z,
        z_bar=z_bar,
        a_lower=a_lower,
        a_upper=a_upper,
        cdf_at_lower=cdf_at_lower,
        cdf_at_upper=cdf_at_upper,
        step=float(h),
        truncation=a_h,
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        raise ConfigurationError(f"unexpected boolean cell {value!r}")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_aw_estimates_csv(path, rows: Sequence[Sequence]) -> None:
    """Rows ``(k_or_delta, estimate, stderr, paths, h, seed)``."""
    _write_csv(path, ["k_or_delta", "estimate", "stderr", "paths", "h", "seed"], rows)


def write_rate_curve_csv(path, curve: RateCurve) -> None:
    _write_csv(
        path,
        ["h", "err_sup", "err_int", "stderr"],
        [
            (h, es, ei, se)
            for h, es, ei, se in zip(curve.h_values, curve.err_sup, curve.err_int, curve.stderr)
        ],
    )


def write_moments_csv(path, rows: Sequence[MomentRow]) -> None:
    _write_csv(path, ["h", "p", "sup_moment"], [(r.h, r.p, r.sup_moment) for r in rows])

"""Drift-regularising space transform for piecewise one-sided Lipschitz drift.

For a scalar SDE ``dX = b(t, X) dt + sigma(t, X) dW`` whose drift jumps at
finitely many points ``xi_1 < ... < xi_m`` (time-homogeneous, ``sigma(xi_k)
!= 0``), the map

    G(x) = x + sum_k alpha_k * phibar_k(x),
    alpha_k = (b(xi_k-) - b(xi_k+)) / (2 * sigma(xi_k)^2),

with a compactly supported bump ``phibar_k`` around each jump point, is a
monotone C^1 bijection with Lipschitz second derivative such that
``Y = G(X)`` solves an SDE with continuous, one-sided Lipschitz drift

    btilde = (b G' + sigma^2 G'' / 2) o G^{-1},
    sigmatilde = (sigma G') o G^{-1}.

The curvature jump of ``G`` at ``xi_k`` (``G''(xi_k+-) = +-2 alpha_k``) cancels
the drift jump; the cancellation identity is
``b(xi_k+) - b(xi_k-) + 2 alpha_k sigma(xi_k)^2 = 0``.

The bump is the degree-8 piecewise polynomial

    phibar(xi + s) = sign(s) * c0^2 * F(|s| / c0),    F(u) = u^2 (1 - u^2)^3,

supported on ``|s| <= c0``, with derivatives

    F'(u)   = 2 u (1 - u^2)^2 (1 - 4 u^2),
    F''(u)  = 2 (1 - u^2) (1 - 17 u^2 + 28 u^4),
    F'''(u) = -72 u + 360 u^3 - 336 u^5.

``F''(0) = 2`` produces the required curvature jump, ``F(1) = F'(1) = F''(1)
= 0`` makes ``G`` equal to the identity outside the bumps with two continuous
derivatives, and ``sup |F'| < 6`` keeps ``G'`` inside
``[1 - 6 c0 max|alpha|, 1 + 6 c0 max|alpha|]`` under the support-radius rule

    c0 = 0.5 * min( min_k 1 / (6 |alpha_k|),  min_k (xi_{k+1} - xi_k) / 2 ),

so ``G' >= 1/2 > 0`` always and bumps of neighbouring jump points never
overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AssumptionError, ConfigurationError
from .models import CoefficientSpec

__all__ = [
    "PiecewiseTransform",
    "TransformedCoefficients",
    "build_transform",
    "invert_transform",
    "transformed_coefficients",
]

Array = np.ndarray

_INVERSE_RTOL = 1e-12
_LIMIT_DELTA = 1e-8
_LIMIT_RTOL = 1e-6


# ---------------------------------------------------------------------------
# bump polynomial on the reference interval [0, 1]
# ---------------------------------------------------------------------------


def _f0(u: Array) -> Array:
    w = 1.0 - u * u
    return u * u * w * w * w


def _f1(u: Array) -> Array:
    w = 1.0 - u * u
    return 2.0 * u * w * w * (1.0 - 4.0 * u * u)


def _f2(u: Array) -> Array:
    u2 = u * u
    return 2.0 * (1.0 - u2) * (1.0 - 17.0 * u2 + 28.0 * u2 * u2)


def _f3(u: Array) -> Array:
    u2 = u * u
    return u * (-72.0 + 360.0 * u2 - 336.0 * u2 * u2)


# sup over [0, 1] of |f1|, attained at u^2 = (17 + sqrt(177)) / 56; rounded up
_BUMP_SLOPE_SUP = 0.3608


# ---------------------------------------------------------------------------
# transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseTransform:
    """The monotone bijection ``G`` and its derivatives.

    All evaluators accept floats or arrays and vectorise elementwise.  At a
    jump point itself ``g_second`` returns the right limit ``+2 alpha_k``.
    """

    breakpoints: tuple[float, ...]
    alphas: tuple[float, ...]
    c0: float

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.alphas):
            raise ConfigurationError("breakpoints and alphas must have equal length")
        if self.breakpoints:
            if not (self.c0 > 0.0 and math.isfinite(self.c0)):
                raise ConfigurationError(f"c0 must be positive and finite, got {self.c0!r}")
            gaps = np.diff(np.asarray(self.breakpoints))
            if gaps.size and self.c0 > 0.5 * float(gaps.min()):
                raise ConfigurationError("bump supports overlap: c0 exceeds half the minimal gap")
            worst = max((abs(a) for a in self.alphas), default=0.0)
            if 6.0 * self.c0 * worst > 1.0 + 1e-12:
                raise ConfigurationError(
                    "support radius too large: 6 * c0 * max|alpha| must not exceed 1"
                )

    @property
    def is_identity(self) -> bool:
        return not self.breakpoints or all(a == 0.0 for a in self.alphas)

    @property
    def lipschitz_bound(self) -> float:
        """Sound upper bound on ``sup G'``."""
        worst = max((abs(a) for a in self.alphas), default=0.0)
        return 1.0 + 6.0 * self.c0 * worst

    @property
    def inverse_lipschitz_bound(self) -> float:
        """Sound upper bound on ``sup (G^{-1})' = 1 / inf G'``."""
        # the 6 c0 envelope on the bump slope degenerates at the admissible
        # cap 6 c0 max|alpha| = 1; the true slope sup 0.360750... keeps the
        # reciprocal finite everywhere the constructor accepts
        worst = max((abs(a) for a in self.alphas), default=0.0)
        return 1.0 / (1.0 - _BUMP_SLOPE_SUP * self.c0 * worst)

    # -- evaluation ---------------------------------------------------------

    def _accumulate(self, x: "Array | float", term: Callable[[Array, float], Array],
                    base: "Array | None" = None) -> "Array | float":
        xs = np.asarray(x, dtype=float)
        out = np.zeros_like(xs) if base is None else base.copy()
        for xi, alpha in zip(self.breakpoints, self.alphas):
            if alpha == 0.0:
                continue
            s = xs - xi
            mask = np.abs(s) < self.c0
            if mask.any():
                out = np.where(mask, out + alpha * term(s, self.c0), out)
        return out if np.ndim(x) else float(out)

    def g(self, x: "Array | float") -> "Array | float":
        """``G(x) = x + sum_k alpha_k phibar_k(x)``."""
        def term(s: Array, c0: float) -> Array:
            u = np.minimum(np.abs(s) / c0, 1.0)
            return np.sign(s) * c0 * c0 * _f0(u)
        xs = np.asarray(x, dtype=float)
        return self._accumulate(x, term, base=xs)

    def g_prime(self, x: "Array | float") -> "Array | float":
        """``G'(x)``, equal to 1 outside the bumps and always in ``[1/2, 3/2]``."""
        def term(s: Array, c0: float) -> Array:
            u = np.minimum(np.abs(s) / c0, 1.0)
            return c0 * _f1(u)
        xs = np.asarray(x, dtype=float)
        return self._accumulate(x, term, base=np.ones_like(xs))

    def g_second(self, x: "Array | float") -> "Array | float":
        """``G''(x)`` with the right-limit convention at the jump points."""
        def term(s: Array, c0: float) -> Array:
            u = np.minimum(np.abs(s) / c0, 1.0)
            return np.where(s >= 0.0, 1.0, -1.0) * _f2(u)
        return self._accumulate(x, term)

    def inverse(self, y: "Array | float") -> "Array | float":
        """``G^{-1}(y)`` to relative accuracy 1e-12; exact identity off the bumps."""
        return invert_transform(self, y)


def invert_transform(transform: PiecewiseTransform, y: "Array | float") -> "Array | float":
    """Solve ``G(x) = y`` for ``x``.

    Outside the bump images (which coincide with the bump supports, since
    ``G`` fixes each interval ``[xi_k - c0, xi_k + c0]`` setwise) the result
    is ``y`` itself, bit for bit.  Inside, a safeguarded Newton iteration with
    a bisection fallback on ``[y - c0, y + c0]`` runs until

        |G(x) - y| <= 1e-12 * (1 + |y|).

    Each element's iteration is independent of the rest of the batch, so
    results do not depend on how inputs are grouped into calls.
    """
    ys = np.asarray(y, dtype=float)
    out = ys.copy()
    if transform.is_identity:
        return out if np.ndim(y) else float(out)
    c0 = transform.c0
    solve = np.zeros(ys.shape, dtype=bool)
    for xi, alpha in zip(transform.breakpoints, transform.alphas):
        if alpha != 0.0:
            solve |= np.abs(ys - xi) < c0

    if solve.any():
        yv = ys[solve]
        lo = yv - c0
        hi = yv + c0
        x = yv.copy()
        tol = _INVERSE_RTOL * (1.0 + np.abs(yv))
        res = np.asarray(transform.g(x)) - yv
        active = np.abs(res) > tol
        for _ in range(200):
            if not active.any():
                break
            # Bracket update keeps G(lo) <= y <= G(hi); G is increasing.
            lo = np.where(active & (res < 0.0), x, lo)
            hi = np.where(active & (res > 0.0), x, hi)
            deriv = np.asarray(transform.g_prime(x))
            step = res / deriv
            cand = x - step
            bad = (cand <= lo) | (cand >= hi)
            cand = np.where(bad, 0.5 * (lo + hi), cand)
            x = np.where(active, cand, x)
            res = np.where(active, np.asarray(transform.g(x)) - yv, res)
            active = np.abs(res) > tol
        if active.any():
            raise AssumptionError("transform inversion did not converge; G may not be monotone")
        out[solve] = x
    return out if np.ndim(y) else float(out)


# ---------------------------------------------------------------------------
# construction from a coefficient spec
# ---------------------------------------------------------------------------


def _one_sided_limit(drift, xi: float, side: int) -> float:
    """Numeric one-sided drift limit at a jump point, with a step-halving check."""
    delta = _LIMIT_DELTA * (1.0 + abs(xi))
    v1 = float(np.asarray(drift(0.0, xi + side * delta)))
    v2 = float(np.asarray(drift(0.0, xi + side * 0.5 * delta)))
    if abs(v1 - v2) > _LIMIT_RTOL * (1.0 + abs(v1)):
        raise ConfigurationError(
            f"drift limit at breakpoint {xi} (side {side:+d}) did not stabilise: "
            f"{v1} vs {v2} at half step"
        )
    return v2


def build_transform(spec: CoefficientSpec) -> PiecewiseTransform:
    """Build ``G`` for a ``growth_disc`` spec.

    With no breakpoints the identity transform is returned.  The jump sizes
    are taken from numeric one-sided limits of the drift at each breakpoint.

    Raises
    ------
    ConfigurationError
        If the spec is not of class ``growth_disc`` or a one-sided limit
        fails its step-halving stability check.
    AssumptionError
        If the diffusion vanishes at a breakpoint.
    """
    if spec.regularity_class != "growth_disc":
        raise ConfigurationError(
            f"the transform requires regularity class 'growth_disc', "
            f"got {spec.regularity_class!r}"
        )
    bps = spec.breakpoints
    if not bps:
        return PiecewiseTransform(breakpoints=(), alphas=(), c0=1.0)

    alphas = []
    for xi in bps:
        sig = float(np.asarray(spec.diffusion(0.0, xi)))
        if sig == 0.0:
            raise AssumptionError(f"diffusion vanishes at breakpoint {xi}")
        b_minus = _one_sided_limit(spec.drift, xi, -1)
        b_plus = _one_sided_limit(spec.drift, xi, +1)
        alphas.append(0.5 * (b_minus - b_plus) / (sig * sig))

    candidates = [1.0 / (6.0 * abs(a)) for a in alphas if a != 0.0]
    candidates += [0.5 * (bps[k + 1] - bps[k]) for k in range(len(bps) - 1)]
    c0 = 0.5 * min(candidates) if candidates else 1.0
    return PiecewiseTransform(breakpoints=bps, alphas=tuple(alphas), c0=c0)


# ---------------------------------------------------------------------------
# transformed coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransformedCoefficients:
    """Coefficients of the transformed SDE ``dY = btilde(Y) dt + sigmatilde(Y) dW``.

    ``one_sided_bound`` and ``lipschitz_bound`` are declared constants
    (cross-checked against a probe at construction), never probe estimates.
    """

    drift: Callable[["Array | float"], "Array | float"]
    diffusion: Callable[["Array | float"], "Array | float"]
    one_sided_bound: float
    lipschitz_bound: float
    transform: PiecewiseTransform
    base: CoefficientSpec


def _probe_points(transform: PiecewiseTransform) -> Array:
    pieces = [np.linspace(-2.0, 2.0, 101)]
    for xi in transform.breakpoints:
        pieces.append(xi + transform.c0 * np.linspace(-1.25, 1.25, 501))
    return np.unique(np.concatenate(pieces))


def transformed_coefficients(
    spec: CoefficientSpec, transform: "PiecewiseTransform | None" = None
) -> TransformedCoefficients:
    """Transformed drift and diffusion with their declared regularity constants.

    For a breakpoint-free spec the constants fall back to the spec's own
    bounds; otherwise ``transformed_drift_bound`` and
    ``transformed_diffusion_bound`` must be declared.  A finite-difference
    probe around the bumps cross-checks the declarations and raises
    ``ConfigurationError`` with a witness pair if the observed slope exceeds a
    declared constant by more than 1 percent.
    """
    if transform is None:
        transform = build_transform(spec)

    if transform.is_identity:
        l_drift = spec.one_sided_lipschitz_bound
        l_diff = spec.diffusion_lipschitz_bound
        if l_drift is None or l_diff is None:
            raise ConfigurationError(
                "identity transform requires one_sided_lipschitz_bound and "
                "diffusion_lipschitz_bound on the spec"
            )
    else:
        l_drift = spec.transformed_drift_bound
        l_diff = spec.transformed_diffusion_bound
        if l_drift is None or l_diff is None:
            raise ConfigurationError(
                "transformed_drift_bound and transformed_diffusion_bound must be "
                "declared to step the transformed scheme; they are never estimated"
            )

    def drift(z: "Array | float") -> "Array | float":
        x = transform.inverse(z)
        xs = np.asarray(x, dtype=float)
        b = np.asarray(spec.drift(0.0, xs), dtype=float)
        sig = np.asarray(spec.diffusion(0.0, xs), dtype=float)
        val = b * np.asarray(transform.g_prime(xs)) \
            + 0.5 * sig * sig * np.asarray(transform.g_second(xs))
        return val if np.ndim(z) else float(val)

    def diffusion(z: "Array | float") -> "Array | float":
        x = transform.inverse(z)
        xs = np.asarray(x, dtype=float)
        sig = np.asarray(spec.diffusion(0.0, xs), dtype=float)
        val = sig * np.asarray(transform.g_prime(xs))
        return val if np.ndim(z) else float(val)

    # Probe cross-check of the declared constants on a bump-dense grid.
    xs = _probe_points(transform)
    zs = np.asarray(transform.g(xs))
    bt = np.asarray(drift(zs))
    st = np.asarray(diffusion(zs))
    dz = np.diff(zs)
    drift_slopes = np.diff(bt) / dz
    diff_slopes = np.abs(np.diff(st)) / dz
    worst_drift = float(drift_slopes.max())
    worst_diff = float(diff_slopes.max())
    if worst_drift > l_drift * 1.01 + 1e-9:
        i = int(np.argmax(drift_slopes))
        raise ConfigurationError(
            f"declared transformed drift bound {l_drift} is exceeded by the probe: "
            f"slope {worst_drift:.6g} between z={zs[i]!r} and z={zs[i + 1]!r}"
        )
    if worst_diff > l_diff * 1.01 + 1e-9:
        i = int(np.argmax(diff_slopes))
        raise ConfigurationError(
            f"declared transformed diffusion bound {l_diff} is exceeded by the probe: "
            f"slope {worst_diff:.6g} between z={zs[i]!r} and z={zs[i + 1]!r}"
        )

    return TransformedCoefficients(
        drift=drift,
        diffusion=diffusion,
        one_sided_bound=float(l_drift),
        lipschitz_bound=float(l_diff),
        transform=transform,
        base=spec,
    )

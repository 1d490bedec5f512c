"""One-step maps, the implicit drift solve, and the path drivers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awsde import (
    ConfigurationError,
    StepSizeError,
    config_from_alias,
    TimeGrid,
    builtin_model,
    em_step,
    implicit_solve,
    sample_increments,
    semi_implicit_em_step,
    simulate_coupled,
    simulate_path,
    symmetrised_em_step,
    transformed_coefficients,
    transformed_step,
    truncate_increments,
    truncation_level,
)

CUBIC_ROOT_H01_Y1 = 0.921698994204678631812128132491
CUBIC_ROOT_H025_Y15 = 1.13472845336184579170705897882
CUBIC_ROOT_H025_YM2 = -1.36465560765603865473896747942
CUBIC_ROOT_HSMALL = 1.24810132959551342587549278201

# transformed one-step map on the discontinuous-drift builtin, h = 2^-10
TSTEP_DW0 = 1.000482166680259643109944
TSTEP_DW_POS = 1.026774596167418905132927
TSTEP_DW_NEG = 0.95244140625
# h = 2^-8 violates the step guard but the root is still unique
TSTEP_COARSE_DW0 = 1.001700467269929591510433


def _cubic_drift(z):
    return -np.asarray(z) ** 3


def test_em_step_values():
    brown = builtin_model("brownian")
    assert em_step(brown, 0.0, 0.0, 0.25, 0.3) == 0.3
    cir = builtin_model("cir", kappa=1.0, eta=1.0, gamma=1.0)
    assert em_step(cir, 0.0, 1.0, 0.125, 0.0) == 1.0
    cubic = builtin_model("cubic")
    assert em_step(cubic, 0.0, 2.0, 0.1, 0.0) == pytest.approx(1.2, abs=1e-15)


def test_implicit_solve_frozen_roots():
    assert implicit_solve(1.0, _cubic_drift, 0.1) == pytest.approx(CUBIC_ROOT_H01_Y1, rel=1e-11)
    assert implicit_solve(1.5, _cubic_drift, 0.25) == pytest.approx(CUBIC_ROOT_H025_Y15, rel=1e-11)
    assert implicit_solve(-2.0, _cubic_drift, 0.25) == pytest.approx(CUBIC_ROOT_H025_YM2, rel=1e-11)
    assert implicit_solve(1.25, _cubic_drift, 2.0 ** -10) == pytest.approx(CUBIC_ROOT_HSMALL, rel=1e-11)


def test_implicit_solve_fixed_points():
    assert implicit_solve(0.0, _cubic_drift, 0.1) == pytest.approx(0.0, abs=1e-12)
    # linear drift admits the closed form y / (1 + lambda h)
    lam = 3.0
    for y in (-2.0, 0.5, 7.0):
        z = implicit_solve(y, lambda x: -lam * np.asarray(x), 0.2)
        assert z == pytest.approx(y / (1.0 + lam * 0.2), rel=1e-12)


def test_implicit_solve_vectorised_matches_scalar():
    ys = np.array([1.0, 1.5, -2.0, 0.0])
    hs = 0.25
    batch = implicit_solve(ys, _cubic_drift, hs)
    singles = np.array([implicit_solve(float(y), _cubic_drift, hs) for y in ys])
    assert np.array_equal(batch, singles)


def test_semi_implicit_reduces_to_em_without_drift():
    brown = builtin_model("brownian")
    for x, dw in [(0.0, 0.3), (2.0, -1.0), (-4.0, 0.0)]:
        assert semi_implicit_em_step(brown, 0.0, x, 0.25, dw) == em_step(brown, 0.0, x, 0.25, dw)


def test_semi_implicit_cubic_values():
    cubic = builtin_model("cubic")
    assert semi_implicit_em_step(cubic, 0.0, 0.0, 0.1, 0.0) == pytest.approx(0.0, abs=1e-12)
    z = semi_implicit_em_step(cubic, 0.0, 1.0, 0.1, 0.0)
    assert z == pytest.approx(CUBIC_ROOT_H01_Y1, rel=1e-11)


def test_transformed_step_frozen_values():
    tc = transformed_coefficients(builtin_model("sign_drift"))
    h = 2.0 ** -10
    assert transformed_step(tc, 1.0, h, 0.0) == pytest.approx(TSTEP_DW0, rel=1e-10)
    assert transformed_step(tc, 1.0, h, 0.03) == pytest.approx(TSTEP_DW_POS, rel=1e-10)
    assert transformed_step(tc, 1.0, h, -0.05) == pytest.approx(TSTEP_DW_NEG, rel=1e-10)


def test_transformed_step_guard():
    tc = transformed_coefficients(builtin_model("sign_drift"))
    h = 2.0 ** -8  # violates h < 1 / one_sided_bound = 1/500
    with pytest.raises(StepSizeError):
        transformed_step(tc, 1.0, h, 0.0)
    z = transformed_step(tc, 1.0, h, 0.0, enforce_guard=False)
    assert z == pytest.approx(TSTEP_COARSE_DW0, rel=1e-10)


def test_transformed_equals_semi_implicit_for_continuous_drift():
    cubic = builtin_model("cubic")
    tc = transformed_coefficients(cubic)
    assert tc.transform.is_identity
    for x, dw in [(1.0, 0.0), (2.0, -0.5), (-1.5, 0.25)]:
        assert transformed_step(tc, x, 0.1, dw) == semi_implicit_em_step(cubic, 0.0, x, 0.1, dw)


def test_transformed_equals_semi_implicit_off_bump():
    # start and end far from the jump at 1: G = id on both sides of the step
    spec = builtin_model("sign_drift")
    tc = transformed_coefficients(spec)
    h = 2.0 ** -10
    for x, dw in [(3.0, 0.01), (-1.0, -0.02), (2.5, 0.0)]:
        assert transformed_step(tc, x, h, dw) == semi_implicit_em_step(spec, 0.0, x, h, dw)


def test_symmetrised_step_values():
    # the reflected scheme fixes the mean-reversion level when dW = 0
    assert symmetrised_em_step(1.0, 1.0, 1.0, 1.0, 0.25, 0.0) == 1.0
    assert symmetrised_em_step(1.0, 0.8, 1.0, 0.0, 0.125, 0.0) == pytest.approx(0.1, rel=1e-12)
    # reflection: x + kappa(eta - x)h + gamma sqrt(x) dW = 1 + 0 - 1.5 = -0.5 -> 0.5
    assert symmetrised_em_step(1.0, 1.0, 1.0, 1.0, 0.25, -1.5) == pytest.approx(0.5, rel=1e-12)


def test_symmetrised_scheme_requires_cir():
    with pytest.raises(ConfigurationError):
        config_from_alias("sym-em", builtin_model("brownian"))


def test_simulate_path_driftless_is_cumsum():
    grid = TimeGrid(1.0, 64)
    batch = sample_increments(grid, seed=11, path_index=3)
    cfg = config_from_alias("em", builtin_model("brownian"))
    path = simulate_path(cfg, batch)
    expected = np.concatenate([[0.0], np.cumsum(batch.values)])
    assert np.array_equal(path.values, expected)


def test_simulate_path_zero_noise_contracts():
    grid = TimeGrid(1.0, 10)
    batch = sample_increments(grid, seed=0, path_index=0)
    zero = batch.__class__(grid=grid, seed=0, path_index=0,
                           values=np.zeros(grid.steps))
    cfg = config_from_alias("iem", builtin_model("cubic"))
    path = simulate_path(cfg, zero).values
    assert path[0] == 1.0
    assert path[1] == pytest.approx(CUBIC_ROOT_H01_Y1, rel=1e-11)
    assert np.all(np.diff(path) < 0.0)
    assert np.all(path > 0.0)


def test_simulate_path_same_stream_identical():
    grid = TimeGrid(1.0, 32)
    cfg = config_from_alias("tiem", builtin_model("cubic"))
    a = simulate_path(cfg, sample_increments(grid, seed=5, path_index=2))
    b = simulate_path(cfg, sample_increments(grid, seed=5, path_index=2))
    assert np.array_equal(a.values, b.values)


def test_simulate_coupled_factor_one_is_fine_path():
    fine = TimeGrid(1.0, 64)
    cfg = config_from_alias("iem", builtin_model("cubic"))
    out = simulate_coupled(cfg, fine, (1,), seed=9, path_index=4)
    direct = simulate_path(cfg, sample_increments(fine, seed=9, path_index=4))
    assert np.array_equal(out[1].values, direct.values)


def test_simulate_coupled_driftless_exact_on_shared_nodes():
    # coarse increments are exact sums of fine ones, so the driftless unit
    # diffusion agrees at shared nodes with no discretisation error at all
    fine = TimeGrid(1.0, 128)
    cfg = config_from_alias("em", builtin_model("brownian"))
    out = simulate_coupled(cfg, fine, (1, 8), seed=2, path_index=0)
    assert np.array_equal(out[8].values, out[1].values[::8])


def test_simulate_coupled_errors_shrink_with_refinement():
    fine = TimeGrid(1.0, 256)
    cfg = config_from_alias("iem", builtin_model("cubic"))
    errs = []
    for factor in (64, 16, 4):
        sq = 0.0
        for pi in range(32):
            out = simulate_coupled(cfg, fine, (1, factor), seed=21, path_index=pi)
            sq += np.max(np.abs(out[factor].values - out[1].values[::factor])) ** 2
        errs.append(np.sqrt(sq / 32))
    assert errs[0] > errs[1] > errs[2]


def test_guard_policies():
    spec = builtin_model("sign_drift")
    grid = TimeGrid(1.0, 64)  # h = 1/64 > 1/500
    strict = config_from_alias("tiem", spec, guard_policy="strict")
    with pytest.raises(StepSizeError):
        simulate_path(strict, sample_increments(grid, seed=1, path_index=0))
    warn = config_from_alias("tiem", spec, guard_policy="warn")
    path = simulate_path(warn, sample_increments(grid, seed=1, path_index=0))
    assert np.all(np.isfinite(path.values))


def test_implicit_map_strictly_increasing():
    ys = np.linspace(-5.0, 5.0, 401)
    zs = implicit_solve(ys, _cubic_drift, 0.25)
    assert np.all(np.diff(zs) > 0.0)
    tc = transformed_coefficients(builtin_model("sign_drift"))
    ys = np.linspace(0.5, 1.5, 401)
    zs = implicit_solve(ys, tc.drift, 2.0 ** -10)
    assert np.all(np.diff(zs) > 0.0)


def test_one_step_monotone_in_state_and_noise():
    # 10^4 ordered pairs, truncated noise, guarded step size: the transformed
    # semi-implicit map must preserve order in both arguments
    spec = builtin_model("sign_drift")
    tc = transformed_coefficients(spec)
    h = 2.0 ** -13
    assert h < 1.0 / tc.one_sided_bound
    assert 1.0 - tc.lipschitz_bound * truncation_level(h).value > 0.0
    rng = np.random.default_rng(77)
    n = 10_000
    xs = rng.uniform(0.5, 1.5, size=n)
    gaps = rng.uniform(1e-6, 0.25, size=n)
    a_h = truncation_level(h).value
    dws = rng.uniform(-a_h, a_h, size=n)
    lo = transformed_step(tc, xs, h, dws)
    hi = transformed_step(tc, xs + gaps, h, dws)
    assert int(np.sum(hi <= lo)) == 0
    dgaps = rng.uniform(1e-8, 0.01, size=n)
    dlo = transformed_step(tc, xs, h, np.clip(dws - dgaps, -a_h, a_h))
    dhi = transformed_step(tc, xs, h, np.clip(dws + dgaps, -a_h, a_h))
    assert int(np.sum(dhi < dlo)) == 0


def test_truncated_driver_respects_level():
    grid = TimeGrid(1.0, 4096)
    batch = truncate_increments(sample_increments(grid, seed=3, path_index=1))
    assert np.max(np.abs(batch.values)) <= truncation_level(grid.step).value


@given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=0.01, max_value=0.45))
@settings(max_examples=50, deadline=None)
def test_implicit_solve_residual_contract(y, h):
    z = implicit_solve(y, _cubic_drift, h)
    assert abs(z - h * float(_cubic_drift(z)) - y) <= 1e-12 * (1.0 + abs(y))

"""Shared fixtures: irregular coefficient specs used across test modules."""

import numpy as np
import pytest

from awsde import CoefficientSpec


def _piecewise_drift(breakpoints, values):
    bps = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)

    def drift(t, x):
        xs = np.asarray(x, dtype=float)
        # side="right": at a breakpoint the value of the right interval applies
        return vals[np.searchsorted(bps, xs, side="right")]

    return drift


@pytest.fixture(scope="session")
def synthetic_spec():
    """Three drift jumps of mixed sign, non-constant Lipschitz diffusion.

    The jump at 0 goes upward, so the matching bump coefficient is negative;
    together with the two downward jumps this exercises both signs of the
    transform on one model.
    """
    return CoefficientSpec(
        drift=_piecewise_drift((-1.0, 0.0, 2.0), (2.0, -1.0, 1.5, -0.5)),
        diffusion=lambda t, x: 1.0 + 0.25 * np.tanh(np.asarray(x, dtype=float)),
        initial_value=0.5,
        breakpoints=(-1.0, 0.0, 2.0),
        one_sided_lipschitz_bound=0.0,
        diffusion_lipschitz_bound=0.25,
        growth_constants=(1.0, 1.0, 1.0),
        regularity_class="growth_disc",
        name="three_jump",
        transformed_drift_bound=4000.0,
        transformed_diffusion_bound=10.0,
    )


@pytest.fixture(scope="session")
def additive_sign_spec():
    """The jump-drift model with unit diffusion (additive noise)."""
    return CoefficientSpec(
        drift=lambda t, x: np.where(np.asarray(x, dtype=float) >= 1.0, -1.5, 2.5),
        diffusion=lambda t, x: np.ones_like(np.asarray(x, dtype=float)),
        initial_value=0.5,
        breakpoints=(1.0,),
        one_sided_lipschitz_bound=0.0,
        diffusion_lipschitz_bound=0.0,
        growth_constants=(1.0, 1.0, 1.0),
        regularity_class="growth_disc",
        name="additive_sign",
        transformed_drift_bound=500.0,
        transformed_diffusion_bound=6.0,
    )

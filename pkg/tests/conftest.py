import numpy as np
import pytest

from chlab import Grid, Parameters, ScalarField


@pytest.fixture
def grid1d():
    return Grid(64, 2.0)


@pytest.fixture
def grid2d():
    return Grid((32, 24), (1.5, 1.0))


@pytest.fixture
def params():
    return Parameters(
        sigma=1.0,
        c=0.1,
        theta_u=0.8,
        theta0_u=1.0,
        theta_v=0.7,
        theta0_v=1.1,
        coupling_a=0.3,
        coupling_b=0.1,
        coupling_c=-0.2,
    )


def random_field(grid, rng, lo=-1.0, hi=1.0):
    return ScalarField(grid, rng.uniform(lo, hi, grid.shape))


def bandlimited_field(grid, rng, frac=0.25, scale=1.0):
    """Random field supported on the lowest `frac` of modes per axis."""
    coeffs = np.zeros(grid.shape)
    cut = tuple(max(2, int(m * frac)) for m in grid.n)
    sub = tuple(slice(0, c) for c in cut)
    coeffs[sub] = rng.standard_normal(cut) * scale
    return ScalarField(grid, grid.inv(coeffs))

"""Session-wide fixtures: the shipped ground states are computed once."""

import numpy as np
import pytest

import fnls


@pytest.fixture(scope="session")
def bo_state():
    """Benjamin-Ono case: n=1, s=1/2, alpha=1 with closed form 2/(1+x^2)."""
    grid = fnls.build_grid(1, 200.0, 8192)
    return fnls.compute_ground_state(grid, 0.5, 1.0, tol=1e-11, decay_window=(10.0, 50.0))


@pytest.fixture(scope="session")
def case_a():
    """Flagship 1D reduction case: n=1, s=3/4, alpha=1."""
    grid = fnls.build_grid(1, 100.0, 2048)
    return fnls.compute_ground_state(grid, 0.75, 1.0, tol=1e-11, decay_window=(20.0, 45.0))


@pytest.fixture(scope="session")
def case_b():
    """Cubic 1D case: n=1, s=0.6, alpha=2."""
    grid = fnls.build_grid(1, 100.0, 2048)
    return fnls.compute_ground_state(grid, 0.6, 2.0, tol=1e-11, decay_window=(12.0, 33.0))


@pytest.fixture(scope="session")
def case_c():
    """2D case: n=2, s=0.8, alpha=1."""
    grid = fnls.build_grid(2, 48.0, 256)
    return fnls.compute_ground_state(grid, 0.8, 1.0, tol=1e-11, decay_window=(16.0, 27.0))


@pytest.fixture(scope="session")
def well_spec(case_a):
    """Normalized even well V = 2 - exp(-x^2) with z0 = 0 (on the case-a grid)."""
    spec = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 0.0)
    return fnls.normalize_at_critical_point(spec, [0.0], case_a.grid)


def asymmetric_double_well(z0=0.3):
    """Two unequal Gaussian wells with an analytic critical point at z0.

    Depths are matched so the gradients cancel exactly at z0; differing
    widths make the third derivative nonzero, so the concentration point
    genuinely moves with eps.
    """
    a, w1, w2, d1 = 1.0, 1.0, 1.5, -1.0
    d2 = d1 * (w2**2 / w1**2) * np.exp(-(a**2) / w1**2 + a**2 / w2**2)
    return fnls.make_potential(
        "double_gaussian",
        [[z0 - a], [z0 + a]],
        [d1, d2],
        [w1, w2],
        3.0,
    )


@pytest.fixture(scope="session")
def skewed_spec(case_a):
    """Normalized asymmetric double well with z0 = 0.3."""
    return fnls.normalize_at_critical_point(asymmetric_double_well(0.3), [0.3], case_a.grid)

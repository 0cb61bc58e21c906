import numpy as np
import pytest

import fnls
from fnls.errors import GridMismatchError


@pytest.fixture(scope="module")
def pi_grid():
    return fnls.build_grid(1, np.pi, 128)


def rand_field(grid, seed):
    return fnls.RealField(grid, np.random.default_rng(seed).standard_normal(grid.shape))


def test_frac_laplacian_eigenfunction(pi_grid):
    u = fnls.sample_function(pi_grid, lambda x: np.cos(2 * x))
    out = fnls.frac_laplacian(u, 0.5)
    assert np.max(np.abs(out.values - 2 * u.values)) < 1e-12


def test_frac_laplacian_kills_constants(pi_grid):
    u = fnls.sample_function(pi_grid, lambda x: np.full_like(x, 3.7))
    out = fnls.frac_laplacian(u, 0.5)
    assert np.max(np.abs(out.values)) < 1e-12


def test_frac_laplacian_benjamin_ono_identity():
    # (-Lap)^{1/2} [2/(1+x^2)] = u^2 - u, from the continuum pair e^{-|k|}
    g = fnls.build_grid(1, 200.0, 4096)
    u = fnls.sample_function(g, lambda x: 2.0 / (1.0 + x**2))
    out = fnls.frac_laplacian(u, 0.5)
    assert np.max(np.abs(out.values - (u.values**2 - u.values))) < 1e-4


@pytest.mark.parametrize("order", [-0.5, 0.0, 2.5])
def test_frac_laplacian_rejects_bad_order(pi_grid, order):
    u = rand_field(pi_grid, 0)
    with pytest.raises(ValueError):
        fnls.frac_laplacian(u, order)


def test_sobolev_norm_constant(pi_grid):
    u = fnls.sample_function(pi_grid, lambda x: np.full_like(x, -2.0))
    for t in (0.0, 0.5, 1.3):
        assert fnls.sobolev_norm(u, t) == pytest.approx(2.0 * np.sqrt(2 * np.pi), rel=1e-13)


def test_sobolev_norm_cosine(pi_grid):
    u = fnls.sample_function(pi_grid, np.cos)
    assert fnls.sobolev_norm(u, 1.0) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-13)


def test_sobolev_norm_matches_parseval(pi_grid):
    u = rand_field(pi_grid, 1)
    direct = np.sqrt(fnls.integrate(fnls.RealField(pi_grid, u.values**2)))
    assert fnls.sobolev_norm(u, 0.0) == pytest.approx(direct, rel=1e-12)


def test_sobolev_norm_rejects_negative_order(pi_grid):
    with pytest.raises(ValueError):
        fnls.sobolev_norm(rand_field(pi_grid, 2), -0.1)


def test_l2_inner_definition(pi_grid):
    u = rand_field(pi_grid, 3)
    assert fnls.l2_inner(u, u) == pytest.approx(fnls.l2_norm(u) ** 2, rel=1e-12)


def test_l2_inner_orthogonality(pi_grid):
    u = fnls.sample_function(pi_grid, np.cos)
    v = fnls.sample_function(pi_grid, np.sin)
    assert abs(fnls.l2_inner(u, v)) < 1e-12


def test_l2_inner_grid_mismatch(pi_grid):
    other = fnls.build_grid(1, np.pi, 64)
    with pytest.raises(GridMismatchError):
        fnls.l2_inner(rand_field(pi_grid, 0), rand_field(other, 0))


@pytest.mark.parametrize("order", [0.4, 0.75, 1.0])
def test_frac_laplacian_self_adjoint(pi_grid, order):
    u, v = rand_field(pi_grid, 4), rand_field(pi_grid, 5)
    lhs = fnls.l2_inner(fnls.frac_laplacian(u, order), v)
    rhs = fnls.l2_inner(u, fnls.frac_laplacian(v, order))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_resolvent_constant(pi_grid):
    u = fnls.sample_function(pi_grid, np.ones_like)
    out = fnls.resolvent_multiplier(u, 0.5)
    assert np.max(np.abs(out.values - 1.0)) < 1e-12


def test_resolvent_cosine(pi_grid):
    u = fnls.sample_function(pi_grid, lambda x: np.cos(2 * x))
    out = fnls.resolvent_multiplier(u, 0.5)
    assert np.max(np.abs(out.values - u.values / 3.0)) < 1e-12


def test_resolvent_composition_is_identity(pi_grid):
    u = rand_field(pi_grid, 6)
    half = fnls.resolvent_multiplier(u, 0.8)
    back = fnls.RealField(pi_grid, fnls.frac_laplacian(half, 0.8).values + half.values)
    assert np.max(np.abs(back.values - u.values)) < 1e-12 * np.max(np.abs(u.values))


def test_semigroup_property():
    g = fnls.build_grid(1, 5.0, 256)
    # smooth field: low-mode content keeps amplification mild
    u = fnls.sample_function(g, lambda x: np.exp(-(x**2)) * np.cos(3 * x))
    for s1, s2 in ((0.4, 0.6), (0.25, 0.5), (0.9, 0.9)):
        once = fnls.frac_laplacian(fnls.frac_laplacian(u, s1), s2)
        direct = fnls.frac_laplacian(u, s1 + s2)
        scale = np.max(np.abs(direct.values))
        assert np.max(np.abs(once.values - direct.values)) < 1e-10 * scale


def test_positivity(pi_grid):
    u = rand_field(pi_grid, 7)
    u = fnls.RealField(pi_grid, u.values / fnls.l2_norm(u))
    assert fnls.l2_inner(fnls.frac_laplacian(u, 0.6), u) >= -1e-12


def test_norm_monotonicity(pi_grid):
    u = rand_field(pi_grid, 8)
    orders = [0.0, 0.3, 0.8, 1.5, 2.0]
    norms = [fnls.sobolev_norm(u, t) for t in orders]
    for lo, hi in zip(norms, norms[1:]):
        assert lo <= hi * (1 + 1e-12)


def test_multiplier_symbol_values(pi_grid):
    op = fnls.MultiplierOp(pi_grid, "frac_laplacian", 0.5)
    k0 = np.argmin(np.abs(pi_grid.axis_freqs))
    assert op.symbol[k0] == 0.0
    assert np.all(op.symbol >= 0) and np.all(np.isfinite(op.symbol))
    assert fnls.MultiplierOp(pi_grid, "bessel", 1.2).symbol[k0] == 1.0
    assert fnls.MultiplierOp(pi_grid, "resolvent", 0.5).symbol[k0] == 1.0

import numpy as np
import pytest

import fnls
from fnls.errors import ConfigError
from conftest import asymmetric_double_well


@pytest.fixture
def well():
    # V(x) = 2 - exp(-|x|^2) in 2D
    return fnls.make_potential("gaussian_well", [[0.0, 0.0]], [-1.0], [1.0], 2.0)


def test_well_values_at_origin(well):
    assert fnls.eval_potential(well, [0.0, 0.0]) == pytest.approx(1.0)
    assert np.allclose(fnls.grad_potential(well, [0.0, 0.0]), 0.0)
    assert np.allclose(fnls.hess_potential(well, [0.0, 0.0]), 2.0 * np.eye(2))


def test_well_value_off_centre():
    v = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 2.0)
    assert fnls.eval_potential(v, [1.0]) == pytest.approx(2.0 - np.exp(-1.0))


@pytest.mark.parametrize("seed", range(5))
def test_gradient_hessian_match_central_differences(seed):
    spec = asymmetric_double_well(0.3)
    rng = np.random.default_rng(seed)
    step = 1e-5
    for _ in range(20):
        x = rng.uniform(-3, 3, size=1)
        grad = fnls.grad_potential(spec, x)
        hess = fnls.hess_potential(spec, x)
        fd_grad = (fnls.eval_potential(spec, x + step) - fnls.eval_potential(spec, x - step)) / (2 * step)
        fd_hess = (
            fnls.eval_potential(spec, x + step)
            - 2 * fnls.eval_potential(spec, x)
            + fnls.eval_potential(spec, x - step)
        ) / step**2
        assert abs(grad[0] - fd_grad) < 1e-6
        assert abs(hess[0, 0] - fd_hess) < 1e-4


def test_hessian_exactly_symmetric():
    spec = fnls.make_potential("double_gaussian", [[0.5, -0.2], [-1.0, 0.7]], [-1.0, -0.5], [1.0, 2.0], 3.0)
    x = np.array([0.3, -0.9])
    h = fnls.hess_potential(spec, x)
    assert np.array_equal(h, h.T)


def test_rescaled_field_small_eps_limit(well):
    grid = fnls.build_grid(2, 5.0, 32)
    z = np.array([0.4, -0.1])
    field = fnls.rescaled_potential_field(well, grid, 1e-8, z)
    assert np.max(np.abs(field.values - fnls.eval_potential(well, z))) < 1e-7
    at_crit = fnls.rescaled_potential_field(well, grid, 1e-8, [0.0, 0.0])
    assert np.max(np.abs(at_crit.values - 1.0)) < 1e-12


def test_rescaled_field_identity_scaling():
    spec = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 2.0)
    grid = fnls.build_grid(1, 5.0, 64)
    field = fnls.rescaled_potential_field(spec, grid, 1.0, [0.0])
    direct = fnls.sample_function(grid, lambda x: 2.0 - np.exp(-(x**2)))
    assert np.max(np.abs(field.values - direct.values)) < 1e-14


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_rescaled_field_taylor_bound(eps):
    # sup_{|y|<=rho} |V(eps y + z0) - 1| <= sup|V''| (eps rho)^2 / 2
    spec = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 2.0)
    grid = fnls.build_grid(1, 40.0, 1024)
    rho = 10.0
    field = fnls.rescaled_potential_field(spec, grid, eps, [0.0])
    mask = np.abs(grid.axis_nodes) <= rho
    observed = np.max(np.abs(field.values[mask] - 1.0))
    hess_bound = fnls.derivative_sup_bounds(spec)[2]
    assert observed <= hess_bound * (eps * rho) ** 2 / 2


def test_normalize_shifts_to_unit_value():
    spec = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 3.0)
    out = fnls.normalize_at_critical_point(spec, [0.0])
    assert out.energy_shift == pytest.approx(1.0)
    assert out.offset == pytest.approx(2.0)
    assert fnls.eval_potential(out, [0.0]) == pytest.approx(1.0)


def test_normalize_bump_is_nondegenerate_maximum():
    spec = fnls.make_potential("gaussian_bump", [[0.0]], [1.0], [1.0], 1.0)
    grid = fnls.build_grid(1, 10.0, 128)
    out = fnls.normalize_at_critical_point(spec, [0.0], grid)
    assert out.energy_shift == pytest.approx(1.0)
    assert fnls.eval_potential(out, [0.0]) == pytest.approx(1.0)
    assert fnls.hess_potential(out, [0.0])[0, 0] < 0


def test_normalize_double_gaussian_saddle():
    spec = asymmetric_double_well(0.3)
    grid = fnls.build_grid(1, 50.0, 512)
    out = fnls.normalize_at_critical_point(spec, [0.3], grid)
    assert np.max(np.abs(fnls.grad_potential(out, [0.3]))) < 1e-12
    assert fnls.eval_potential(out, [0.3]) == pytest.approx(1.0)
    assert np.min(fnls.rescaled_potential_field(out, grid, 1.0, [0.0]).values) > 0


def test_normalize_rejects_non_critical_point():
    spec = fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 2.0)
    with pytest.raises(ConfigError):
        fnls.normalize_at_critical_point(spec, [0.5])


def test_normalize_rejects_degenerate_hessian():
    # co-centred well+bump tuned so V''(0) = 0
    spec = fnls.make_potential("double_gaussian", [[0.0], [0.0]], [-1.0, 4.0], [1.0, 2.0], 2.0)
    with pytest.raises(ConfigError):
        fnls.normalize_at_critical_point(spec, [0.0])


def test_nondegeneracy_of_shipped_specs():
    grid = fnls.build_grid(1, 50.0, 512)
    for spec, z0 in [
        (fnls.make_potential("gaussian_well", [[0.0]], [-1.0], [1.0], 2.0), [0.0]),
        (fnls.make_potential("gaussian_bump", [[0.0]], [1.0], [1.0], 1.0), [0.0]),
        (asymmetric_double_well(0.3), [0.3]),
    ]:
        out = fnls.normalize_at_critical_point(spec, z0, grid)
        assert abs(np.linalg.det(fnls.hess_potential(out, z0))) > 1e-8


def test_derivative_bounds_finite_and_ordered():
    spec = asymmetric_double_well(0.0)
    bounds = fnls.derivative_sup_bounds(spec)
    assert set(bounds) == {0, 1, 2, 3}
    assert all(np.isfinite(b) and b > 0 for b in bounds.values())
    # the recorded bound really dominates a dense sample of |V'''|
    xs = np.linspace(-5, 5, 4001).reshape(-1, 1)
    step = 1e-4
    fd3 = (
        fnls.eval_potential(spec, xs + 2 * step)
        - 2 * fnls.eval_potential(spec, xs + step)
        + 2 * fnls.eval_potential(spec, xs - step)
        - fnls.eval_potential(spec, xs - 2 * step)
    ) / (2 * step**3)
    assert np.max(np.abs(fd3)) <= bounds[3] * (1 + 1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="nope", centers=[[0.0]], depths=[-1.0], widths=[1.0], offset=0.0),
        dict(kind="gaussian_well", centers=[[0.0]], depths=[1.0], widths=[1.0], offset=0.0),
        dict(kind="gaussian_bump", centers=[[0.0]], depths=[-1.0], widths=[1.0], offset=0.0),
        dict(kind="gaussian_well", centers=[[0.0]], depths=[-1.0], widths=[-1.0], offset=0.0),
        dict(kind="double_gaussian", centers=[[0.0]], depths=[-1.0], widths=[1.0], offset=0.0),
    ],
)
def test_make_potential_rejects_bad_specs(kwargs):
    with pytest.raises(ConfigError):
        fnls.make_potential(**kwargs)

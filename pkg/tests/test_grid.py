import json

import numpy as np
import pytest

import fnls
from fnls.errors import ConfigError, GridMismatchError


def test_build_grid_1d_nodes_and_freqs():
    g = fnls.build_grid(1, np.pi, 8)
    assert np.allclose(g.axis_nodes, -np.pi + (np.pi / 4) * np.arange(8))
    assert sorted(g.axis_freqs.tolist()) == pytest.approx(list(range(-4, 4)))


def test_build_grid_2d_counts():
    g = fnls.build_grid(2, 10.0, 16)
    assert g.num_points == 256
    assert g.spacing == pytest.approx(1.25)


@pytest.mark.parametrize(
    "n,L,N",
    [(1, 20.0, 7), (1, 20.0, 4), (4, 10.0, 16), (1, -1.0, 16), (1, 0.0, 16)],
)
def test_build_grid_rejects_bad_parameters(n, L, N):
    with pytest.raises(ConfigError):
        fnls.build_grid(n, L, N)


def test_constant_field_transforms_to_delta():
    g = fnls.build_grid(1, 3.0, 64)
    u = fnls.sample_function(g, lambda x: np.full_like(x, 2.5))
    uh = fnls.forward_transform(u)
    k0 = np.argmin(np.abs(g.axis_freqs))
    assert uh.coeffs[k0] == pytest.approx(2.5, abs=1e-14)
    rest = np.abs(uh.coeffs).sum() - abs(uh.coeffs[k0])
    assert rest < 1e-13


def test_cosine_coefficients():
    L = 7.0
    g = fnls.build_grid(1, L, 128)
    u = fnls.sample_function(g, lambda x: np.cos(np.pi * x / L))
    uh = fnls.forward_transform(u)
    plus = np.argmin(np.abs(g.axis_freqs - np.pi / L))
    minus = np.argmin(np.abs(g.axis_freqs + np.pi / L))
    assert uh.coeffs[plus] == pytest.approx(0.5, abs=1e-13)
    assert uh.coeffs[minus] == pytest.approx(0.5, abs=1e-13)


@pytest.mark.parametrize("n,N", [(1, 256), (2, 32), (3, 16)])
def test_round_trip_random(n, N):
    g = fnls.build_grid(n, 5.0, N)
    rng = np.random.default_rng(0)
    u = fnls.RealField(g, rng.standard_normal(g.shape))
    back = fnls.inverse_transform(fnls.forward_transform(u))
    assert np.max(np.abs(back.values - u.values)) < 1e-12 * np.max(np.abs(u.values))


def test_conjugate_symmetry_of_real_field():
    g = fnls.build_grid(2, 4.0, 32)
    rng = np.random.default_rng(3)
    uh = fnls.forward_transform(fnls.RealField(g, rng.standard_normal(g.shape)))
    assert uh.conjugate_symmetry_defect() < 1e-12


def test_transform_linearity():
    g = fnls.build_grid(1, 5.0, 128)
    rng = np.random.default_rng(1)
    u = fnls.RealField(g, rng.standard_normal(g.shape))
    v = fnls.RealField(g, rng.standard_normal(g.shape))
    lhs = fnls.forward_transform(fnls.RealField(g, 2.0 * u.values - 3.0 * v.values)).coeffs
    rhs = 2.0 * fnls.forward_transform(u).coeffs - 3.0 * fnls.forward_transform(v).coeffs
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(np.max(np.abs(rhs)), 1.0)


def test_integrate_constant_is_torus_volume():
    g = fnls.build_grid(1, np.pi, 64)
    one = fnls.sample_function(g, np.ones_like)
    assert fnls.integrate(one) == pytest.approx(2 * np.pi, rel=1e-14)


def test_integrate_mean_zero_mode():
    L = 4.0
    g = fnls.build_grid(1, L, 64)
    u = fnls.sample_function(g, lambda x: np.cos(np.pi * x / L))
    assert abs(fnls.integrate(u)) < 1e-12


def test_integrate_lorentzian_squared():
    # int 4/(1+x^2)^2 dx = 2*pi; tail correction is O(L^-3)
    g = fnls.build_grid(1, 200.0, 8192)
    u = fnls.sample_function(g, lambda x: 4.0 / (1.0 + x**2) ** 2)
    assert fnls.integrate(u) == pytest.approx(2 * np.pi, rel=1e-3)


def test_parseval():
    g = fnls.build_grid(1, 6.0, 256)
    rng = np.random.default_rng(2)
    u = fnls.RealField(g, rng.standard_normal(g.shape))
    lhs = fnls.integrate(fnls.RealField(g, u.values**2))
    uh = fnls.forward_transform(u)
    rhs = (2 * g.half_width) ** g.n * np.sum(np.abs(uh.coeffs) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_field_size_mismatch_rejected():
    g = fnls.build_grid(1, 1.0, 16)
    with pytest.raises(GridMismatchError):
        fnls.RealField(g, np.zeros(17))


def test_field_rejects_non_finite():
    g = fnls.build_grid(1, 1.0, 16)
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        fnls.RealField(g, bad)


def test_fnsf_round_trip(tmp_path):
    g = fnls.build_grid(2, 3.0, 16)
    rng = np.random.default_rng(5)
    u = fnls.RealField(g, rng.standard_normal(g.shape))
    path = tmp_path / "field.fnsf"
    fnls.write_fnsf(path, u, s=0.7, alpha=1.5, kind="groundstate")
    back, header = fnls.read_fnsf(path)
    assert back.grid == g
    assert np.array_equal(back.values, u.values)
    assert header["kind"] == "groundstate"
    assert header["s"] == 0.7 and header["alpha"] == 1.5
    # header is a single JSON line followed by raw little-endian float64
    raw = path.read_bytes()
    line, _, rest = raw.partition(b"\n")
    json.loads(line)
    assert len(rest) == 8 * g.num_points


def test_fnsf_rejects_malformed_header(tmp_path):
    path = tmp_path / "bad.fnsf"
    path.write_bytes(b"not json\n" + b"\x00" * 16)
    with pytest.raises(ConfigError):
        fnls.read_fnsf(path)


def test_fnsf_rejects_truncated_payload(tmp_path):
    g = fnls.build_grid(1, 1.0, 16)
    u = fnls.RealField(g, np.zeros(16))
    path = tmp_path / "short.fnsf"
    fnls.write_fnsf(path, u)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ConfigError):
        fnls.read_fnsf(path)

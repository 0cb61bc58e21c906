"""Periodic tensor-product grid on [-L, L)^n and its discrete Fourier transform.

The domain is the n-torus [-L, L)^n sampled at N points per axis,
x_i = -L + i*h with h = 2L/N.  Frequencies are k_j = pi*j/L for integer
j in {-N/2, ..., N/2 - 1}, stored in standard FFT order.  The transform
normalization is chosen so a constant field c has coefficient c at k = 0:

    u_hat(k) = N^{-n} * sum_x u(x) exp(-i k.x),
    u(x)     = sum_k u_hat(k) exp(+i k.x).

Because the nodes start at -L rather than 0, the raw FFT picks up a phase
(-1)^j per axis; ``forward_transform``/``inverse_transform`` include it so
coefficients refer to the physical exp(i k x) basis.  Pure Fourier
multipliers do not need the phase (it cancels), so operator code applies
symbols directly to the raw FFT.

File format "FNSF": one JSON header line {"n", "N", "L", "s", "alpha",
"kind"} terminated by a newline, followed by N^n raw little-endian IEEE-754
float64 values, row-major with the last axis fastest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .errors import ConfigError, GridMismatchError

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "build_grid",
    "coordinate_arrays",
    "sample_function",
    "forward_transform",
    "inverse_transform",
    "integrate",
    "read_fnsf",
    "write_fnsf",
]


@dataclass(frozen=True)
class GridSpec:
    """Immutable description of the periodic grid.

    Parameters
    ----------
    n : int
        Spatial dimension, one of 1, 2, 3.
    half_width : float
        L > 0; the torus is [-L, L)^n.
    points_per_dim : int
        N per axis; a power of two, at least 8.
    """

    n: int
    half_width: float
    points_per_dim: int

    # derived lattices, excluded from equality/hash
    axis_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    axis_indices: np.ndarray = field(init=False, repr=False, compare=False)
    axis_freqs: np.ndarray = field(init=False, repr=False, compare=False)
    k_squared: np.ndarray = field(init=False, repr=False, compare=False)
    mode_parity: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, L, N = self.n, self.half_width, self.points_per_dim
        if n not in (1, 2, 3):
            raise ConfigError(f"dimension must be 1, 2 or 3, got {n}")
        if L <= 0:
            raise ConfigError(f"half_width must be positive, got {L}")
        if N < 8 or (N & (N - 1)) != 0:
            raise ConfigError(f"points_per_dim must be a power of two >= 8, got {N}")
        h = 2.0 * L / N
        j = np.fft.fftfreq(N, d=1.0 / N)  # integer mode numbers, FFT order
        nodes = -L + h * np.arange(N)
        freqs = np.pi * j / L
        k_sq = np.zeros((N,) * n)
        parity = np.ones((N,) * n)
        for ax in range(n):
            shape = [1] * n
            shape[ax] = N
            k_sq = k_sq + (freqs.reshape(shape)) ** 2
            parity = parity * ((-1.0) ** j).reshape(shape)
        for name, arr in (
            ("axis_nodes", nodes),
            ("axis_indices", j),
            ("axis_freqs", freqs),
            ("k_squared", k_sq),
            ("mode_parity", parity),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.n

    @property
    def num_points(self) -> int:
        return self.points_per_dim**self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n

    def axis_frequency(self, ax: int) -> np.ndarray:
        """Frequencies along one axis, broadcastable over the full lattice."""
        shape = [1] * self.n
        shape[ax] = self.points_per_dim
        return self.axis_freqs.reshape(shape)


def build_grid(n: int, half_width: float, points_per_dim: int) -> GridSpec:
    """Validate parameters and construct a :class:`GridSpec`."""
    return GridSpec(n=n, half_width=float(half_width), points_per_dim=int(points_per_dim))


@dataclass(frozen=True)
class RealField:
    """Real samples of a function on the grid nodes."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size == self.grid.num_points:
                v = v.reshape(self.grid.shape)
            else:
                raise GridMismatchError(
                    f"field has {v.size} values, grid needs {self.grid.num_points}"
                )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def like(self, values: np.ndarray) -> "RealField":
        """New field on the same grid."""
        return RealField(self.grid, values)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients indexed by the frequency lattice (FFT order)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            if c.size == self.grid.num_points:
                c = c.reshape(self.grid.shape)
            else:
                raise GridMismatchError(
                    f"spectrum has {c.size} coefficients, grid needs {self.grid.num_points}"
                )
        object.__setattr__(self, "coeffs", c)

    def conjugate_symmetry_defect(self) -> float:
        """Max |u_hat(-k) - conj(u_hat(k))| relative to the largest coefficient."""
        c = self.coeffs
        axes = tuple(range(c.ndim))
        flipped = c
        for ax in axes:
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = max(np.abs(c).max(), 1e-300)
        return float(np.abs(flipped - np.conj(c)).max() / scale)


def coordinate_arrays(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Meshgrid ('ij') of node coordinates, one array per axis."""
    return tuple(np.meshgrid(*([grid.axis_nodes] * grid.n), indexing="ij"))


def sample_function(grid: GridSpec, fn) -> RealField:
    """Sample ``fn(*coords)`` on the grid nodes."""
    return RealField(grid, np.asarray(fn(*coordinate_arrays(grid)), dtype=float))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def forward_transform(u: RealField) -> SpectralField:
    """Fourier coefficients of ``u`` in the physical exp(i k x) basis."""
    g = u.grid
    c = g.mode_parity * _fft.fftn(u.values) / g.num_points
    return SpectralField(g, c)


def inverse_transform(uh: SpectralField) -> RealField:
    """Inverse of :func:`forward_transform`; imaginary residue is discarded."""
    g = uh.grid
    v = _fft.ifftn(g.mode_parity * uh.coeffs) * g.num_points
    return RealField(g, v.real)


def integrate(u: RealField) -> float:
    """h^n * sum of values: the exact trapezoid rule on the torus."""
    return float(u.grid.cell_volume * np.sum(u.values))


# ---------------------------------------------------------------------------
# FNSF file format


def write_fnsf(path, u: RealField, *, s=None, alpha=None, kind="field", config=None):
    """Write a field as an FNSF file.

    ``s``/``alpha`` record model parameters when the field is tied to a
    model (ground states, solutions); ``config`` optionally embeds the
    resolved run configuration for provenance.
    """
    g = u.grid
    header = {
        "n": g.n,
        "N": g.points_per_dim,
        "L": g.half_width,
        "s": s,
        "alpha": alpha,
        "kind": kind,
    }
    if config is not None:
        header["config"] = config
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_fnsf(path) -> tuple[RealField, dict]:
    """Read an FNSF file; returns the field and its parsed header."""
    with open(path, "rb") as fh:
        raw = fh.readline()
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: malformed FNSF header: {exc}") from exc
        for key in ("n", "N", "L"):
            if key not in header:
                raise ConfigError(f"{path}: FNSF header missing {key!r}")
        grid = build_grid(header["n"], header["L"], header["N"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != grid.num_points:
        raise ConfigError(
            f"{path}: expected {grid.num_points} values, found {data.size}"
        )
    return RealField(grid, data.copy()), header

"""Analytic potentials: finite sums of Gaussians plus a constant.

Every shipped kind is C^3-bounded by construction, has exact gradient and
Hessian, and is normalized so the designated critical point has value 1,
with the subtracted constant recorded as the physical energy shift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .grid import GridSpec, RealField, coordinate_arrays

__all__ = [
    "PotentialSpec",
    "make_potential",
    "eval_potential",
    "grad_potential",
    "hess_potential",
    "rescaled_potential_field",
    "normalize_at_critical_point",
    "derivative_sup_bounds",
]

KINDS = ("gaussian_well", "gaussian_bump", "double_gaussian")

# sup over rho of the m-th radial derivative magnitude of exp(-rho^2),
# maximized over derivative directions; scales as 1/w^m for width w.
_GAUSS_DERIV_SUP = {0: 1.0, 1: 0.857763884961, 2: 2.0, 3: 3.903532727247}


@dataclass(frozen=True)
class PotentialSpec:
    """V(x) = offset + sum_i depths[i] * exp(-|x - centers[i]|^2 / widths[i]^2).

    ``energy_shift`` is the constant absorbed by normalization (the physical
    E); ``critical_point`` is set once the spec has been normalized.
    """

    kind: str
    centers: tuple[tuple[float, ...], ...]
    depths: tuple[float, ...]
    widths: tuple[float, ...]
    offset: float
    energy_shift: float = 0.0
    critical_point: tuple[float, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.centers[0])


def make_potential(kind, centers, depths, widths, offset) -> PotentialSpec:
    """Validate and build a :class:`PotentialSpec` (not yet normalized)."""
    if kind not in KINDS:
        raise ConfigError(f"unknown potential kind {kind!r}; expected one of {KINDS}")
    centers = tuple(tuple(float(c) for c in np.atleast_1d(pt)) for pt in centers)
    depths = tuple(float(d) for d in depths)
    widths = tuple(float(w) for w in widths)
    expected = 2 if kind == "double_gaussian" else 1
    if not (len(centers) == len(depths) == len(widths) == expected):
        raise ConfigError(
            f"{kind} needs {expected} Gaussian term(s), got "
            f"{len(centers)} centers / {len(depths)} depths / {len(widths)} widths"
        )
    if len({len(c) for c in centers}) != 1:
        raise ConfigError("all centers must share one dimension")
    if any(w <= 0 for w in widths):
        raise ConfigError("widths must be positive")
    if kind == "gaussian_well" and depths[0] >= 0:
        raise ConfigError("gaussian_well needs a negative depth")
    if kind == "gaussian_bump" and depths[0] <= 0:
        raise ConfigError("gaussian_bump needs a positive depth")
    return PotentialSpec(kind, centers, depths, widths, float(offset))


def _as_points(spec: PotentialSpec, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape == () and spec.dim == 1:
        pts = pts.reshape(1)
    if pts.shape[-1] != spec.dim:
        raise ValueError(f"points have dimension {pts.shape[-1]}, potential has {spec.dim}")
    return pts


def eval_potential(spec: PotentialSpec, x) -> np.ndarray | float:
    """V at one point (shape (n,)) or a batch (shape (..., n))."""
    pts = _as_points(spec, x)
    out = np.full(pts.shape[:-1], spec.offset, dtype=float)
    for c, d, w in zip(spec.centers, spec.depths, spec.widths):
        r2 = np.sum((pts - np.asarray(c)) ** 2, axis=-1)
        out += d * np.exp(-r2 / w**2)
    return out if out.shape else float(out)


def grad_potential(spec: PotentialSpec, x) -> np.ndarray:
    """Exact gradient, shape (..., n)."""
    pts = _as_points(spec, x)
    out = np.zeros_like(pts)
    for c, d, w in zip(spec.centers, spec.depths, spec.widths):
        diff = pts - np.asarray(c)
        r2 = np.sum(diff**2, axis=-1)
        out += (d * np.exp(-r2 / w**2))[..., None] * (-2.0 / w**2) * diff
    return out


def hess_potential(spec: PotentialSpec, x) -> np.ndarray:
    """Exact (symmetric) Hessian, shape (..., n, n)."""
    pts = _as_points(spec, x)
    n = spec.dim
    out = np.zeros(pts.shape[:-1] + (n, n), dtype=float)
    eye = np.eye(n)
    for c, d, w in zip(spec.centers, spec.depths, spec.widths):
        diff = pts - np.asarray(c)
        r2 = np.sum(diff**2, axis=-1)
        amp = d * np.exp(-r2 / w**2)
        outer = diff[..., :, None] * diff[..., None, :]
        out += amp[..., None, None] * ((4.0 / w**4) * outer - (2.0 / w**2) * eye)
    return out


def rescaled_potential_field(spec: PotentialSpec, grid: GridSpec, eps: float, center) -> RealField:
    """Samples of y -> V(eps*y + center) on the grid."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.n:
        raise ValueError(f"center has dimension {center.size}, grid has {grid.n}")
    coords = np.stack(coordinate_arrays(grid), axis=-1)
    return RealField(grid, eval_potential(spec, eps * coords + center))


def normalize_at_critical_point(spec: PotentialSpec, z0, grid: GridSpec | None = None) -> PotentialSpec:
    """Shift the constant so V(z0) = 1, recording the shift as the energy.

    ``z0`` must be a nondegenerate critical point of the kind; positivity of
    the normalized potential is checked on ``grid`` when one is supplied,
    otherwise through the global lower bound offset + sum(min(depth, 0)).
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    if z0.size != spec.dim:
        raise ConfigError(f"z0 has dimension {z0.size}, potential has {spec.dim}")
    g = grad_potential(spec, z0)
    scale = max(abs(spec.offset), max(abs(d) for d in spec.depths), 1.0)
    if np.max(np.abs(g)) > 1e-10 * scale:
        raise ConfigError(
            f"z0={z0.tolist()} is not a critical point: |grad V| = {np.max(np.abs(g)):.3e}"
        )
    hess = hess_potential(spec, z0)
    if abs(np.linalg.det(hess)) <= 1e-8:
        raise ConfigError(
            f"critical point is degenerate: |det D2V(z0)| = {abs(np.linalg.det(hess)):.3e}"
        )
    shift = float(eval_potential(spec, z0)) - 1.0
    out = replace(
        spec,
        offset=spec.offset - shift,
        energy_shift=spec.energy_shift + shift,
        critical_point=tuple(z0.tolist()),
    )
    if grid is not None:
        vmin = float(np.min(rescaled_potential_field(out, grid, 1.0, np.zeros(grid.n)).values))
        # exact zeros are float underflow of Gaussian tails, not sign changes
        if vmin < 0:
            raise ConfigError(f"normalized potential is not positive on the torus (min {vmin:.3e})")
    else:
        lower = out.offset + sum(min(d, 0.0) for d in out.depths)
        if lower <= 0 and any(d < 0 for d in out.depths):
            raise ConfigError(
                "cannot certify positivity of the normalized potential; pass a grid to check on"
            )
    return out


def derivative_sup_bounds(spec: PotentialSpec) -> dict[int, float]:
    """Analytic sup bounds for |D^J V| over R^n, |J| = 0..3 (C^3-boundedness)."""
    bounds = {}
    for m in range(4):
        b = abs(spec.offset) if m == 0 else 0.0
        for d, w in zip(spec.depths, spec.widths):
            b += abs(d) * _GAUSS_DERIV_SUP[m] / w**m
        bounds[m] = b
    return bounds

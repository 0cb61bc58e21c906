"""Ground state of the limit equation (-Lap)^s u + u = |u|^a u.

Solved by Petviashvili iteration with the stabilizing exponent
gamma = (a+1)/a; the converged profile is recentred by its mass centroid,
its tail exponent fitted, and the spectral derivatives stored as the
(approximate) kernel of the linearization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import AdmissibilityError, ConvergenceError
from .fracops import frac_seminorm, l2_norm, spectral_gradient, _symbol
from .grid import GridSpec, RealField, coordinate_arrays, integrate, sample_function

__all__ = [
    "AdmissibleRange",
    "GroundState",
    "DecayFit",
    "admissible_range",
    "petviashvili_step",
    "compute_ground_state",
    "ground_state_from_profile",
    "center_profile",
    "decay_exponent_fit",
    "gns_quotient",
    "translate_profile",
]


@dataclass(frozen=True)
class AdmissibleRange:
    """Parameter ranges for (n, s): critical exponent, regularity floor, nu window."""

    alpha_max: float
    s_min: float
    nu_interval: tuple[float, float]
    theorem_regime: bool


def admissible_range(n: int, s: float) -> AdmissibleRange:
    """Critical exponent, minimal s for the concentration theorem, nu interval."""
    if n not in (1, 2, 3):
        raise AdmissibilityError(f"dimension must be 1, 2 or 3, got {n}")
    if not (0.0 < s < 1.0):
        raise AdmissibilityError(f"s must lie in (0, 1), got {s}")
    alpha_max = 4.0 * s / (n - 2.0 * s) if s < n / 2.0 else math.inf
    s_min = max(0.5, n / 4.0)
    m = n + 4.0 * s
    nu_hi = min((3.0 * m - 4.0) / (m + 4.0), (2.0 * m - 2.0) / (m + 2.0))
    return AdmissibleRange(
        alpha_max=alpha_max,
        s_min=s_min,
        nu_interval=(1.0 / 3.0, nu_hi),
        theorem_regime=s > s_min,
    )


@dataclass(frozen=True)
class DecayFit:
    """Least-squares tail exponent of log(radial average) vs log r."""

    slope: float
    intercept: float
    super_polynomial: bool
    window: tuple[float, float]
    radii: np.ndarray
    averages: np.ndarray


@dataclass(frozen=True)
class GroundState:
    """Converged profile with its diagnostics; immutable and shareable."""

    profile: RealField
    s: float
    alpha: float
    residual: float
    mass: float
    kernel_fields: tuple[RealField, ...]
    decay_slope: float
    iterations: int
    multiplier_history: tuple[float, ...]
    tail_bounds: tuple[float, float]

    @property
    def grid(self) -> GridSpec:
        return self.profile.grid


def _limit_residual(u: RealField, s: float, alpha: float) -> RealField:
    sym = _symbol(u.grid, "frac_laplacian", s)
    lap = _fft.ifftn(sym * _fft.fftn(u.values)).real
    return u.like(lap + u.values - np.abs(u.values) ** alpha * u.values)


def petviashvili_step(u: RealField, s: float, alpha: float) -> tuple[RealField, float]:
    """One normalized fixed-point step; returns the new field and the ratio M.

    M = <((-Lap)^s + 1)u, u> / <|u|^a u, u>; the update is
    M^gamma * ((-Lap)^s + 1)^{-1} |u|^a u with gamma = (a+1)/a, and M = 1
    at a solution of the limit equation.
    """
    g = u.grid
    sym = _symbol(g, "frac_laplacian", s)
    uh = _fft.fftn(u.values) / g.num_points
    quad = (2.0 * g.half_width) ** g.n * np.sum((sym + 1.0) * np.abs(uh) ** 2)
    nonlinear = np.abs(u.values) ** alpha * u.values
    pairing = g.cell_volume * np.sum(nonlinear * u.values)
    if abs(pairing) < 1e-300:
        raise ValueError("degenerate input: <|u|^a u, u> vanishes")
    ratio = float(quad / pairing)
    gamma = (alpha + 1.0) / alpha
    inverted = _fft.ifftn(_fft.fftn(nonlinear) / (sym + 1.0)).real
    return u.like(ratio**gamma * inverted), ratio


def compute_ground_state(
    grid: GridSpec,
    s: float,
    alpha: float,
    init: RealField | None = None,
    tol: float = 1e-10,
    max_iter: int = 2000,
    decay_window: tuple[float, float] | None = None,
) -> GroundState:
    """Iterate Petviashvili until ||S0(u)||_0 / ||u||_0 <= tol.

    Parameters
    ----------
    grid : GridSpec
        Discretization; the torus must be large enough for the polynomial
        tail (periodization error scales like L^{-(n+2s)}).
    s, alpha : float
        Fractional order in (0,1) and nonlinearity exponent in (0, alpha_*).
    init : RealField, optional
        Positive radial bump; defaults to exp(-|y|^2).
    decay_window : (r_min, r_max), optional
        Radial window for the tail fit; defaults to (L/5, L/2.2).
    """
    rng_info = admissible_range(grid.n, s)
    if not (0.0 < alpha < rng_info.alpha_max):
        raise AdmissibilityError(
            f"alpha={alpha} outside (0, {rng_info.alpha_max}) for n={grid.n}, s={s}"
        )
    if init is None:
        u = sample_function(grid, lambda *c: np.exp(-sum(x**2 for x in c)))
    else:
        u = init
        if u.grid != grid:
            raise ValueError("initial guess lives on a different grid")
        if np.min(u.values) < 0 or not np.any(u.values > 0):
            raise ValueError("initial guess must be nonnegative and nonzero")

    ratios = []
    rel_res = math.inf
    for it in range(1, max_iter + 1):
        u, ratio = petviashvili_step(u, s, alpha)
        ratios.append(ratio)
        rel_res = l2_norm(_limit_residual(u, s, alpha)) / l2_norm(u)
        if rel_res <= tol:
            break
    else:
        raise ConvergenceError(
            f"Petviashvili did not reach tol={tol} in {max_iter} iterations",
            residual=rel_res,
            iterations=max_iter,
        )

    u = center_profile(u)
    if np.min(u.values) <= 0:
        raise ConvergenceError(
            "converged profile is not strictly positive "
            f"(min {np.min(u.values):.3e}); enlarge the domain",
            residual=rel_res,
            iterations=it,
        )
    return _assemble_ground_state(u, s, alpha, it, ratios, decay_window)


def ground_state_from_profile(
    profile: RealField,
    s: float,
    alpha: float,
    decay_window: tuple[float, float] | None = None,
) -> GroundState:
    """Rebuild the diagnostics of a stored profile (e.g. loaded from disk)."""
    rng_info = admissible_range(profile.grid.n, s)
    if not (0.0 < alpha < rng_info.alpha_max):
        raise AdmissibilityError(
            f"alpha={alpha} outside (0, {rng_info.alpha_max}) for n={profile.grid.n}, s={s}"
        )
    u = center_profile(profile)
    if np.min(u.values) <= 0:
        raise ValueError("profile is not strictly positive")
    return _assemble_ground_state(u, s, alpha, 0, [], decay_window)


def _assemble_ground_state(u, s, alpha, iterations, ratios, decay_window):
    grid = u.grid
    L = grid.half_width
    window = decay_window or (L / 5.0, L / 2.2)
    fit = decay_exponent_fit(u, *window)
    # empirical constants for the two-sided tail bound u ~ C/(1+r^{n+2s})
    weight = fit.averages * (1.0 + fit.radii ** (grid.n + 2.0 * s))
    return GroundState(
        profile=u,
        s=s,
        alpha=alpha,
        residual=l2_norm(_limit_residual(u, s, alpha)),
        mass=integrate(u.like(u.values**2)),
        kernel_fields=tuple(spectral_gradient(u)),
        decay_slope=fit.slope,
        iterations=iterations,
        multiplier_history=tuple(ratios),
        tail_bounds=(float(weight.min()), float(weight.max())),
    )


def center_profile(u: RealField, max_passes: int = 8) -> RealField:
    """Translate (spectral phase shift) so the mass centroid sits at the origin."""
    g = u.grid
    mass = integrate(u.like(u.values**2))
    if mass <= 0:
        raise ValueError("cannot centre a field with vanishing mass")
    coords = coordinate_arrays(g)
    values = u.values
    for _ in range(max_passes):
        density = values**2
        total = np.sum(density)
        centroid = np.array([np.sum(c * density) / total for c in coords])
        if np.max(np.abs(centroid)) <= g.spacing / 100.0:
            break
        phase = np.zeros(g.shape, dtype=complex)
        for ax in range(g.n):
            phase = phase + 1j * g.axis_frequency(ax) * centroid[ax]
        values = _fft.ifftn(np.exp(phase) * _fft.fftn(values)).real
    return RealField(g, values)


def translate_profile(g: GroundState, z, eps: float) -> RealField:
    """Spectral translation u0(y - z/eps); exact on the torus."""
    grid = g.grid
    shift = np.atleast_1d(np.asarray(z, dtype=float)) / eps
    if shift.size != grid.n:
        raise ValueError(f"shift has dimension {shift.size}, grid has {grid.n}")
    if np.max(np.abs(shift)) >= grid.half_width / 2.0:
        raise ValueError(
            f"|z|/eps = {np.max(np.abs(shift)):.3g} wraps more than half the torus"
        )
    phase = np.zeros(grid.shape, dtype=complex)
    for ax in range(grid.n):
        phase = phase - 1j * grid.axis_frequency(ax) * shift[ax]
    return RealField(grid, _fft.ifftn(np.exp(phase) * _fft.fftn(g.profile.values)).real)


def decay_exponent_fit(u: RealField, r_min: float, r_max: float, bins: int = 24) -> DecayFit:
    """Fit log(radial average of u) against log r on [r_min, r_max].

    Flags super-polynomial decay when the slope steepens markedly from the
    lower to the upper half of the window (a power law is log-log linear).
    """
    g = u.grid
    if r_max > g.half_width:
        raise ValueError(f"r_max={r_max} exceeds the half-width {g.half_width}")
    if r_min <= 0 or r_min >= r_max:
        raise ValueError(f"need 0 < r_min < r_max, got ({r_min}, {r_max})")
    radius = np.sqrt(sum(c**2 for c in coordinate_arrays(g)))
    edges = np.geomspace(r_min, r_max, bins + 1)
    radii, averages = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (radius >= lo) & (radius < hi)
        if mask.any():
            radii.append(math.sqrt(lo * hi))
            averages.append(float(u.values[mask].mean()))
    if len(radii) < 8:
        raise ValueError(
            f"window [{r_min}, {r_max}] holds only {len(radii)} radial samples (need >= 8)"
        )
    radii = np.asarray(radii)
    averages = np.asarray(averages)
    if np.min(averages) <= 0:
        raise ValueError("field is not positive on the fit window")
    logr, logu = np.log(radii), np.log(averages)
    slope, intercept = np.polyfit(logr, logu, 1)
    half = len(radii) // 2
    lo_slope = np.polyfit(logr[:half], logu[:half], 1)[0]
    hi_slope = np.polyfit(logr[half:], logu[half:], 1)[0]
    super_poly = hi_slope < 1.3 * lo_slope  # both negative; steeper upper half
    return DecayFit(
        slope=float(slope),
        intercept=float(intercept),
        super_polynomial=bool(super_poly),
        window=(r_min, r_max),
        radii=radii,
        averages=averages,
    )


def gns_quotient(u: RealField, s: float, alpha: float) -> float:
    """Scale- and dilation-invariant Gagliardo-Nirenberg-Sobolev quotient.

    J(u) = ||(-Lap)^{s/2} u||^{n a/(2s)} ||u||^{a+2-n a/(2s)} / int |u|^{a+2};
    minimized exactly by ground states of the limit equation.
    """
    n = u.grid.n
    denom = integrate(u.like(np.abs(u.values) ** (alpha + 2.0)))
    if denom <= 0:
        raise ValueError("GNS quotient undefined: vanishing |u|^{a+2} integral")
    kinetic = frac_seminorm(u, s)
    mass = l2_norm(u)
    p = n * alpha / (2.0 * s)
    return kinetic**p * mass ** (alpha + 2.0 - p) / denom

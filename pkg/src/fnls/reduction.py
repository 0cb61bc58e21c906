"""Lyapunov-Schmidt engine for the rescaled equation.

All computations live on the y-grid: the ansatz profile stays pinned at the
origin and the potential is sampled as V(eps*y + z), which is equivalent to
translating the profile by z/eps but avoids repeated translation error.
The problem splits into

  * the infinite-dimensional part: solve the projected equation
    P S_eps(u0 + phi) = 0 for phi in the complement of the kernel
    span{d_j u0} by a contraction fixed point, inverting the projected
    linearization with preconditioned MINRES, and
  * the finite-dimensional part: drive the kernel components (the reduced
    map) to zero in z, locating the concentration point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft
from scipy.sparse.linalg import LinearOperator, minres

from .errors import ContractionError, ConvergenceError, GridMismatchError
from .fracops import l2_inner, l2_norm, sobolev_norm
from .grid import GridSpec, RealField
from .groundstate import GroundState, admissible_range
from .linearized import LinearizedOperator, orthonormal_kernel_fields
from .potential import PotentialSpec, eval_potential, hess_potential, rescaled_potential_field

__all__ = [
    "EPS_CAP",
    "CENTER_CAP",
    "ReductionProblem",
    "ReductionSolution",
    "MapStudy",
    "StudyRow",
    "AssembledSolution",
    "default_nu",
    "make_problem",
    "s_eps_apply",
    "ansatz_residual",
    "nonlinear_remainder",
    "solve_projected_linear",
    "fixed_point_solve",
    "reduced_map",
    "limit_reduced_map",
    "scaled_map_study",
    "find_concentration_point",
    "assemble_solution",
    "default_ball_samples",
]

EPS_CAP = 0.25
CENTER_CAP = 0.5  # max |z - z0|; mirrors the "sufficiently small" regime


def default_nu(n: int, s: float) -> float:
    """Midpoint of the admissible nu interval."""
    lo, hi = admissible_range(n, s).nu_interval
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ReductionProblem:
    """One (eps, z) instance of the reduced problem on the y-grid."""

    ground: GroundState
    potential: PotentialSpec
    eps: float
    center: np.ndarray
    grid: GridSpec
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if self.grid != self.ground.grid:
            raise GridMismatchError("problem grid differs from the ground-state grid")
        if self.center.size != self.grid.n:
            raise ValueError(f"center has dimension {self.center.size}, grid has {self.grid.n}")
        if not (0.0 < self.eps <= EPS_CAP):
            raise ValueError(f"eps={self.eps} outside (0, {EPS_CAP}]")
        if self.potential.critical_point is not None:
            dist = float(np.max(np.abs(self.center - np.asarray(self.potential.critical_point))))
            if dist > CENTER_CAP:
                raise ValueError(f"|z - z0| = {dist:.3g} exceeds the cap {CENTER_CAP}")
        lo, hi = admissible_range(self.grid.n, self.ground.s).nu_interval
        if not (lo < self.nu < hi):
            raise ValueError(f"nu={self.nu} outside the admissible interval ({lo}, {hi})")

    @cached_property
    def potential_values(self) -> np.ndarray:
        """Samples of V(eps*y + z)."""
        return rescaled_potential_field(self.potential, self.grid, self.eps, self.center).values

    @cached_property
    def operator(self) -> LinearizedOperator:
        """S'_eps at the ansatz: (-Lap)^s + V_eps - (a+1)|u0|^a."""
        w = RealField(self.grid, self.potential_values - 1.0)
        return LinearizedOperator(
            grid=self.grid,
            s=self.ground.s,
            alpha=self.ground.alpha,
            base=self.ground.profile,
            zeroth_order=w,
        )

    @cached_property
    def kernel(self) -> tuple[tuple[RealField, ...], tuple[RealField, ...]]:
        """(raw, orthonormal) kernel fields d_j u0."""
        return orthonormal_kernel_fields(self.ground)

    def project_off(self, values: np.ndarray) -> np.ndarray:
        out = values
        vol = self.grid.cell_volume
        for e in self.kernel[1]:
            out = out - (vol * np.sum(out * e.values)) * e.values
        return out


def make_problem(
    ground: GroundState,
    potential: PotentialSpec,
    eps: float,
    center,
    nu: float | None = None,
) -> ReductionProblem:
    if nu is None:
        nu = default_nu(ground.grid.n, ground.s)
    return ReductionProblem(
        ground=ground,
        potential=potential,
        eps=float(eps),
        center=np.atleast_1d(np.asarray(center, dtype=float)),
        grid=ground.grid,
        nu=float(nu),
    )


def s_eps_apply(p: ReductionProblem, u: RealField) -> RealField:
    """Rescaled residual S_eps(u) = (-Lap)^s u + (V_eps - 1) u + u - |u|^a u."""
    if u.grid != p.grid:
        raise GridMismatchError("field lives on a different grid")
    alpha = p.ground.alpha
    lap = p.operator.apply_values(u.values)  # (-Lap)^s u + (1 + w - (a+1)|u0|^a) u
    correction = (alpha + 1.0) * np.abs(p.ground.profile.values) ** alpha * u.values
    return u.like(lap + correction - np.abs(u.values) ** alpha * u.values)


def ansatz_residual(p: ReductionProblem) -> tuple[RealField, float]:
    """The field (V(eps*y + z) - 1) * u0 and its L^2 norm."""
    field = RealField(p.grid, (p.potential_values - 1.0) * p.ground.profile.values)
    return field, l2_norm(field)


def nonlinear_remainder(u: RealField, phi: RealField, alpha: float) -> RealField:
    """Taylor remainder -(|u+phi|^a (u+phi) - |u|^a u - (a+1)|u|^a phi), pointwise."""
    if u.grid != phi.grid:
        raise GridMismatchError("fields live on different grids")
    uv, pv = u.values, phi.values
    total = uv + pv
    return u.like(
        -(
            np.abs(total) ** alpha * total
            - np.abs(uv) ** alpha * uv
            - (alpha + 1.0) * np.abs(uv) ** alpha * pv
        )
    )


def _solve_projected(p, rhs, tol, max_iter, initial):
    g = p.grid
    shape = g.shape
    op = p.operator
    b = p.project_off(rhs.values)
    rhs_norm = l2_norm(rhs.like(b))
    if rhs_norm == 0.0:
        return RealField(g, np.zeros(shape)), 0

    def augmented(vec):
        f = vec.reshape(shape)
        pf = p.project_off(f)
        return (p.project_off(op.apply_values(pf)) + (f - pf)).ravel()

    sym = op._frac_symbol

    def precondition(vec):
        return _fft.ifftn(_fft.fftn(vec.reshape(shape)) / (sym + 1.0)).real.ravel()

    npts = g.num_points
    a_lin = LinearOperator((npts, npts), matvec=augmented, dtype=float)
    m_lin = LinearOperator((npts, npts), matvec=precondition, dtype=float)
    rtol = float(np.clip(0.001 * tol, 1e-13, 1e-7))
    x0 = initial.values.ravel() if initial is not None else None
    count = [0]

    def tick(_):
        count[0] += 1

    with np.errstate(all="ignore"):
        x, info = minres(a_lin, b.ravel(), x0=x0, rtol=rtol, maxiter=max_iter, M=m_lin, callback=tick)
    phi = p.project_off(x.reshape(shape))
    achieved = l2_norm(rhs.like(p.project_off(op.apply_values(phi)) - b)) / rhs_norm
    if achieved > tol:
        raise ConvergenceError(
            f"projected linear solve reached residual {achieved:.2e} > tol {tol:.1e}"
            + (f" (minres info {info})" if info != 0 else ""),
            residual=achieved,
            iterations=count[0],
        )
    contamination = max(abs(l2_inner(rhs.like(phi), e)) for e in p.kernel[1])
    if contamination > 1e-8 * max(l2_norm(rhs.like(phi)), 1e-300):
        raise ConvergenceError(
            f"kernel contamination {contamination:.2e} on the linear-solve output",
            residual=contamination,
        )
    return rhs.like(phi), count[0]


def solve_projected_linear(
    p: ReductionProblem,
    rhs: RealField,
    tol: float = 1e-10,
    max_iter: int = 8000,
    initial: RealField | None = None,
) -> RealField:
    """Solve P L phi = rhs for phi in the kernel complement.

    MINRES on the augmented operator P L P + (I - P), which is symmetric,
    nonsingular, and acts as the identity on the kernel, preconditioned by
    the resolvent; the kernel projection is applied inside every operator
    application so iterates cannot drift into the kernel.
    """
    if rhs.grid != p.grid:
        raise GridMismatchError("rhs lives on a different grid")
    phi, _ = _solve_projected(p, rhs, tol, max_iter, initial)
    return phi


@dataclass(frozen=True)
class ReductionSolution:
    """Converged correction phi in the kernel complement, with diagnostics."""

    phi: RealField
    phi_norm_2s: float
    ansatz_residual: float
    reduced_value: np.ndarray
    full_residual: float
    iterations: int
    linear_iterations: tuple[int, ...]
    contraction_ratio: float
    theta: float


def fixed_point_solve(p: ReductionProblem, tol: float = 1e-9, max_iter: int = 40) -> ReductionSolution:
    """Iterate phi <- -L^{-1}(P N(phi) + P S_eps(u0)) from phi = 0.

    Stops when the H^{2s} step norm drops below ``tol``; aborts with
    :class:`ContractionError` if consecutive steps (above the noise floor)
    expand.  The recorded contraction ratio is the largest observed step
    ratio.
    """
    g = p.grid
    alpha = p.ground.alpha
    u0 = p.ground.profile
    order_2s = 2.0 * p.ground.s
    s_perp = p.project_off(s_eps_apply(p, u0).values)
    _, ansatz_norm = ansatz_residual(p)

    phi = RealField(g, np.zeros(g.shape))
    steps: list[float] = []
    ratios: list[float] = []
    lin_iters: list[int] = []
    for it in range(1, max_iter + 1):
        remainder = nonlinear_remainder(u0, phi, alpha)
        rhs = RealField(g, -(p.project_off(remainder.values) + s_perp))
        new_phi, minres_its = _solve_projected(p, rhs, min(1e-10, tol), 8000, phi)
        lin_iters.append(minres_its)
        step = sobolev_norm(new_phi.like(new_phi.values - phi.values), order_2s)
        if steps and steps[-1] > 10 * tol and step > 10 * tol:
            ratio = step / steps[-1]
            ratios.append(ratio)
            if ratio >= 1.0:
                raise ContractionError(
                    f"fixed-point step grew by factor {ratio:.3f} at iteration {it}",
                    residual=step,
                    iterations=it,
                    diagnostics={"steps": steps + [step]},
                )
        steps.append(step)
        phi = new_phi
        if step <= tol:
            break
    else:
        raise ConvergenceError(
            f"fixed point did not converge in {max_iter} iterations (last step {steps[-1]:.2e})",
            residual=steps[-1],
            iterations=max_iter,
        )

    full = s_eps_apply(p, RealField(g, u0.values + phi.values))
    projected_norm = l2_norm(RealField(g, p.project_off(full.values)))
    phi_norm = sobolev_norm(phi, order_2s)
    return ReductionSolution(
        phi=phi,
        phi_norm_2s=phi_norm,
        ansatz_residual=ansatz_norm,
        reduced_value=_kernel_components(p, full),
        full_residual=projected_norm,
        iterations=it,
        linear_iterations=tuple(lin_iters),
        contraction_ratio=max(ratios) if ratios else 0.0,
        theta=phi_norm / ansatz_norm if ansatz_norm > 0 else math.inf,
    )


def _kernel_components(p: ReductionProblem, residual_field: RealField) -> np.ndarray:
    return np.array([l2_inner(residual_field, f) / p.eps for f in p.kernel[0]])


def reduced_map(p: ReductionProblem, sol: ReductionSolution) -> np.ndarray:
    """Kernel components (1/eps) <S_eps(u0 + phi), d_j u0> of the residual."""
    corrected = RealField(p.grid, p.ground.profile.values + sol.phi.values)
    return _kernel_components(p, s_eps_apply(p, corrected))


def limit_reduced_map(g: GroundState, spec: PotentialSpec, z) -> np.ndarray:
    """Limiting map -1/2 ||u0||^2 D^2V(z0) z; z is relative to z0."""
    if spec.critical_point is None:
        raise ValueError("potential must be normalized at its critical point first")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    hess = hess_potential(spec, np.asarray(spec.critical_point))
    return -0.5 * g.mass * (hess @ z)


@dataclass(frozen=True)
class StudyRow:
    z: np.ndarray
    v_eps: np.ndarray | None
    v_limit: np.ndarray
    ok: bool
    message: str = ""


@dataclass(frozen=True)
class MapStudy:
    eps: float
    nu: float
    rows: tuple[StudyRow, ...]
    sup_discrepancy: float


def default_ball_samples(n: int, count: int = 9) -> np.ndarray:
    """Sample points of the closed unit ball: origin plus +-e_j and +-e_j/2."""
    if n == 1:
        return np.linspace(-1.0, 1.0, count).reshape(-1, 1)
    pts = [np.zeros(n)]
    for scale in (1.0, 0.5):
        for ax in range(n):
            for sign in (+1.0, -1.0):
                e = np.zeros(n)
                e[ax] = sign * scale
                pts.append(e)
    return np.asarray(pts[:count])


def scaled_map_study(
    g: GroundState,
    spec: PotentialSpec,
    eps: float,
    nu: float | None = None,
    z_samples: np.ndarray | None = None,
    tol: float = 1e-9,
) -> MapStudy:
    """Evaluate v_eps(z) = eps^{-nu} s_eps(z0 + eps^{nu} z) against its limit.

    One fixed-point solve per sample; failed samples are marked rather than
    aborting the table.
    """
    if spec.critical_point is None:
        raise ValueError("potential must be normalized at its critical point first")
    if nu is None:
        nu = default_nu(g.grid.n, g.s)
    if z_samples is None:
        z_samples = default_ball_samples(g.grid.n)
    z0 = np.asarray(spec.critical_point)
    rows = []
    sup = 0.0
    for z in np.atleast_2d(z_samples):
        v_limit = limit_reduced_map(g, spec, z)
        try:
            problem = make_problem(g, spec, eps, z0 + eps**nu * z, nu=nu)
            sol = fixed_point_solve(problem, tol=tol)
            v_eps = sol.reduced_value / eps**nu
            rows.append(StudyRow(z=z, v_eps=v_eps, v_limit=v_limit, ok=True))
            sup = max(sup, float(np.max(np.abs(v_eps - v_limit))))
        except ConvergenceError as exc:
            rows.append(StudyRow(z=z, v_eps=None, v_limit=v_limit, ok=False, message=str(exc)))
    return MapStudy(eps=eps, nu=float(nu), rows=tuple(rows), sup_discrepancy=sup)


def _reduced_at(g, spec, eps, z, tol_fixed):
    problem = make_problem(g, spec, eps, z)
    return fixed_point_solve(problem, tol=tol_fixed)


def find_concentration_point(
    g: GroundState,
    spec: PotentialSpec,
    eps: float,
    z_init,
    tol: float = 1e-8,
    tol_fixed: float = 1e-9,
    max_steps: int = 30,
) -> np.ndarray:
    """Damped Newton on z -> s_eps(z) with a central-difference Jacobian.

    The difference step is eps^2/10 (each column costs one fixed-point
    solve); in one dimension a bracketing bisection takes over when Newton
    stalls.  Raises :class:`ConvergenceError` with the sampled map values
    when no zero is found.
    """
    n = g.grid.n
    z = np.atleast_1d(np.asarray(z_init, dtype=float)).copy()
    sampled: list[tuple[list[float], list[float]]] = []

    def value(point):
        sol = _reduced_at(g, spec, eps, point, tol_fixed)
        sampled.append((point.tolist(), sol.reduced_value.tolist()))
        return sol.reduced_value

    fd_step = eps**2 / 10.0
    fz = value(z)
    for _ in range(max_steps):
        if np.max(np.abs(fz)) <= tol:
            return z
        jac = np.zeros((n, n))
        for col in range(n):
            e = np.zeros(n)
            e[col] = fd_step
            jac[:, col] = (value(z + e) - value(z - e)) / (2.0 * fd_step)
        try:
            delta = np.linalg.solve(jac, -fz)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        for _ in range(6):
            candidate = z + scale * delta
            fc = value(candidate)
            if np.max(np.abs(fc)) < np.max(np.abs(fz)):
                z, fz = candidate, fc
                break
            scale *= 0.5
        else:
            break  # damping exhausted; fall through to bisection in 1D
    if np.max(np.abs(fz)) <= tol:
        return z

    if n == 1:
        root = _bisect_1d(lambda t: float(value(np.array([t]))[0]), float(z[0]), eps, tol)
        if root is not None:
            return np.array([root])
    raise ConvergenceError(
        "no zero of the reduced map found near the initial point",
        residual=float(np.max(np.abs(fz))),
        diagnostics={"samples": sampled},
    )


def _bisect_1d(f, start, eps, tol, max_radius=CENTER_CAP):
    radius = max(eps**2, 1e-3)
    f0 = f(start)
    bracket = None
    while radius <= max_radius:
        a, b = start - radius, start + radius
        fa, fb = f(a), f(b)
        if fa * f0 < 0:
            bracket = (a, start, fa)
        elif fb * f0 < 0:
            bracket = (start, b, f0)
        elif fa * fb < 0:
            bracket = (a, b, fa)
        if bracket:
            break
        radius *= 2.0
    if bracket is None:
        return None
    lo, hi, flo = bracket
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return None


@dataclass(frozen=True)
class AssembledSolution:
    """Solution v_eps on the y-grid, x = eps*y + center."""

    field: RealField
    eps: float
    center: np.ndarray
    full_residual: float
    peak_location: np.ndarray

    @property
    def relative_residual(self) -> float:
        return self.full_residual / l2_norm(self.field)


def assemble_solution(g: GroundState, spec: PotentialSpec, eps: float, center, phi: RealField) -> AssembledSolution:
    """Form v = u0 + phi and record the full-equation residual.

    In x-coordinates the solution is v(x) = u0((x - z)/eps) + phi((x - z)/eps);
    relative residuals are invariant under the change of variables, so the
    recorded norm is the y-grid L^2 norm of S_eps(u0 + phi).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    problem = make_problem(g, spec, eps, center)
    field = RealField(g.grid, g.profile.values + phi.values)
    residual = l2_norm(s_eps_apply(problem, field))
    flat_peak = int(np.argmax(field.values))
    idx = np.unravel_index(flat_peak, g.grid.shape)
    y_peak = np.array([g.grid.axis_nodes[i] for i in idx])
    return AssembledSolution(
        field=field,
        eps=eps,
        center=center,
        full_residual=residual,
        peak_location=eps * y_peak + center,
    )

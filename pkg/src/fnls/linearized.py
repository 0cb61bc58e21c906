"""Matrix-free linearized operators and their extremal eigenanalysis.

The operator is A = (-Lap)^s + 1 + w - (a+1)|base|^a with a stored base
profile and zeroth-order term w (w = V_eps - 1 for the rescaled problem,
w = 0 at the limit).  Eigenpairs come from preconditioned LOBPCG with the
resolvent ((-Lap)^s + 1)^{-1} as preconditioner; a dense fallback covers
small 1D grids.  Kernel handling (projections, deflation) uses the
orthonormalized translated derivatives of the ground state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, lobpcg

from .errors import ConvergenceError, GridMismatchError
from .fracops import _symbol, l2_inner, l2_norm, sobolev_norm, spectral_gradient
from .grid import GridSpec, RealField
from .groundstate import GroundState, translate_profile

__all__ = [
    "LinearizedOperator",
    "EigenResult",
    "GapEstimate",
    "limit_operator",
    "free_operator",
    "apply_linearized",
    "extremal_eigen",
    "morse_index",
    "kernel_projectors",
    "orthonormal_kernel_fields",
    "spectral_gap",
]


@dataclass(frozen=True)
class LinearizedOperator:
    """Symmetric operator (-Lap)^s + 1 + w - (a+1)|base|^a on a fixed grid."""

    grid: GridSpec
    s: float
    alpha: float
    base: RealField
    zeroth_order: RealField | None = None

    def __post_init__(self):
        if self.base.grid != self.grid:
            raise GridMismatchError("base profile lives on a different grid")
        if self.zeroth_order is not None and self.zeroth_order.grid != self.grid:
            raise GridMismatchError("zeroth-order term lives on a different grid")

    @cached_property
    def _local_term(self) -> np.ndarray:
        local = 1.0 - (self.alpha + 1.0) * np.abs(self.base.values) ** self.alpha
        if self.zeroth_order is not None:
            local = local + self.zeroth_order.values
        local.flags.writeable = False
        return local

    @cached_property
    def _frac_symbol(self) -> np.ndarray:
        return _symbol(self.grid, "frac_laplacian", self.s)

    def apply(self, phi: RealField) -> RealField:
        if phi.grid != self.grid:
            raise GridMismatchError("operand lives on a different grid")
        return phi.like(self.apply_values(phi.values))

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        lap = _fft.ifftn(self._frac_symbol * _fft.fftn(values)).real
        return lap + self._local_term * values

    def apply_batch(self, columns: np.ndarray) -> np.ndarray:
        """Apply to (num_points, k) columns with batched FFTs."""
        g = self.grid
        k = columns.shape[1]
        fields = columns.T.reshape((k,) + g.shape)
        axes = tuple(range(1, g.n + 1))
        lap = _fft.ifftn(self._frac_symbol * _fft.fftn(fields, axes=axes), axes=axes).real
        out = lap + self._local_term * fields
        return out.reshape(k, g.num_points).T

    def as_scipy_operator(self) -> LinearOperator:
        g = self.grid
        npts = g.num_points

        def mv(v):
            return self.apply_values(v.reshape(g.shape)).ravel()

        return LinearOperator((npts, npts), matvec=mv, matmat=self.apply_batch, dtype=float)


def limit_operator(g: GroundState) -> LinearizedOperator:
    """Linearization at the ground state of the limit equation (w = 0)."""
    return LinearizedOperator(grid=g.grid, s=g.s, alpha=g.alpha, base=g.profile)


def free_operator(grid: GridSpec, s: float, alpha: float = 1.0) -> LinearizedOperator:
    """(-Lap)^s + 1: base = 0, w = 0."""
    return LinearizedOperator(grid=grid, s=s, alpha=alpha, base=RealField(grid, np.zeros(grid.shape)))


def apply_linearized(op: LinearizedOperator, phi: RealField) -> RealField:
    return op.apply(phi)


@dataclass(frozen=True)
class EigenResult:
    """Sorted extremal eigenpairs with per-pair residual norms."""

    eigenvalues: tuple[float, ...]
    eigenfields: tuple[RealField, ...]
    residuals: tuple[float, ...]


def _resolvent_preconditioner(op: LinearizedOperator) -> LinearOperator:
    g = op.grid
    sym = _symbol(g, "frac_laplacian", op.s)

    def pv(v):
        return _fft.ifftn(_fft.fftn(v.reshape(g.shape)) / (sym + 1.0)).real.ravel()

    def pm(block):
        k = block.shape[1]
        fields = block.T.reshape((k,) + g.shape)
        axes = tuple(range(1, g.n + 1))
        out = _fft.ifftn(_fft.fftn(fields, axes=axes) / (sym + 1.0), axes=axes).real
        return out.reshape(k, g.num_points).T

    return LinearOperator((g.num_points, g.num_points), matvec=pv, matmat=pm, dtype=float)


def _dense_matrix(op: LinearizedOperator) -> np.ndarray:
    a = op.apply_batch(np.eye(op.grid.num_points))
    return 0.5 * (a + a.T)


def _pairs_from_dense(op, count, constraints):
    a = _dense_matrix(op)
    if constraints is not None and constraints.shape[1] > 0:
        # deflate: push the constrained directions far up the spectrum
        q, _ = np.linalg.qr(constraints)
        pa = a - q @ (q.T @ a)
        a = pa - (pa @ q) @ q.T + 1e6 * (q @ q.T)
        a = 0.5 * (a + a.T)
    vals, vecs = scipy.linalg.eigh(a)
    return vals[:count], vecs[:, :count]


def _pairs_from_lobpcg(op, count, constraints, tol, max_iter, seed, initial):
    g = op.grid
    npts = g.num_points
    block = min(count + 2, max(count, npts // 4))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((npts, block))
    for i, f in enumerate(initial[:block]):
        x[:, i] = f.values.ravel()
    if constraints is not None and constraints.shape[1] > 0:
        x -= constraints @ (constraints.T @ x)
    a = op.as_scipy_operator()
    m = _resolvent_preconditioner(op)
    y = constraints if constraints is not None and constraints.shape[1] > 0 else None
    vals = vecs = None
    for _ in range(3):  # warm restarts if the residual floor is not reached
        with np.errstate(all="ignore"):
            vals, vecs = lobpcg(a, x, M=m, Y=y, tol=tol, maxiter=max_iter, largest=False)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        res = a @ vecs - vecs * vals
        worst = max(
            np.linalg.norm(res[:, i]) / max(1.0, abs(vals[i])) / np.linalg.norm(vecs[:, i])
            for i in range(vecs.shape[1])
        )
        if worst <= tol * 10:
            break
        x = vecs
    return vals[:count], vecs[:, :count]


def extremal_eigen(
    op: LinearizedOperator,
    count: int,
    side: str = "lowest",
    *,
    tol: float = 1e-9,
    max_iter: int = 1500,
    seed: int = 0,
    initial_fields: tuple[RealField, ...] = (),
    residual_tol: float = 1e-8,
    dense_cutoff: int = 512,
    _constraints: np.ndarray | None = None,
) -> EigenResult:
    """Lowest ``count`` eigenpairs of a symmetric linearized operator.

    Uses preconditioned LOBPCG (resolvent preconditioner), optionally seeded
    with ``initial_fields``; small 1D problems fall back to a dense solve.
    Raises :class:`ConvergenceError` when the per-pair residual
    ||A phi - lambda phi||_0 exceeds ``residual_tol * max(1, |lambda|)``.
    """
    if side != "lowest":
        raise ValueError(f"only side='lowest' is implemented, got {side!r}")
    if count > 16:
        raise ValueError(f"count must be <= 16, got {count}")
    g = op.grid
    if g.n == 1 and g.points_per_dim <= dense_cutoff:
        vals, vecs = _pairs_from_dense(op, count, _constraints)
    else:
        vals, vecs = _pairs_from_lobpcg(op, count, _constraints, tol, max_iter, seed, initial_fields)

    fields, residuals = [], []
    scale = 1.0 / np.sqrt(g.cell_volume)
    for i in range(count):
        v = vecs[:, i]
        f = RealField(g, v.reshape(g.shape) * scale / np.linalg.norm(v))  # unit L2 norm
        r = l2_norm(f.like(op.apply_values(f.values) - vals[i] * f.values))
        fields.append(f)
        residuals.append(r)
    worst = max(r / max(1.0, abs(v)) for r, v in zip(residuals, vals))
    if worst > residual_tol:
        raise ConvergenceError(
            f"eigensolver residual {worst:.2e} exceeds {residual_tol:.1e}",
            residual=worst,
            diagnostics={"eigenvalues": list(map(float, vals)), "residuals": residuals},
        )
    return EigenResult(
        eigenvalues=tuple(float(v) for v in vals),
        eigenfields=tuple(fields),
        residuals=tuple(residuals),
    )


def morse_index(op: LinearizedOperator, zero_tol: float = 1e-4, **eigen_kwargs) -> int:
    """Number of eigenvalues below -zero_tol among the lowest n + 3."""
    count = eigen_kwargs.pop("count", op.grid.n + 3)
    result = extremal_eigen(op, count, **eigen_kwargs)
    return int(sum(1 for v in result.eigenvalues if v < -zero_tol))


def orthonormal_kernel_fields(g: GroundState, z=None, eps: float = 1.0):
    """Translated kernel fields d_j u_{z,eps} and their orthonormalization.

    Returns ``(raw, ortho)``; symmetric (Loewdin) orthonormalization keeps
    the fields aligned with the coordinate axes.
    """
    grid = g.grid
    if z is not None and np.any(np.asarray(z) != 0):
        raw = tuple(spectral_gradient(translate_profile(g, z, eps)))
    else:
        raw = tuple(g.kernel_fields)
    gram = np.array([[l2_inner(a, b) for b in raw] for a in raw])
    cond = np.linalg.cond(gram)
    if cond > 1e8:
        raise ValueError(f"kernel fields nearly dependent: Gram condition {cond:.2e}")
    w, q = np.linalg.eigh(gram)
    inv_sqrt = q @ np.diag(1.0 / np.sqrt(w)) @ q.T
    ortho = tuple(
        RealField(grid, sum(inv_sqrt[i, j] * raw[i].values for i in range(len(raw))))
        for j in range(len(raw))
    )
    return raw, ortho


def kernel_projectors(g: GroundState, z=None, eps: float = 1.0):
    """Orthogonal projections onto and off span{d_j u_{z,eps}}."""
    _, ortho = orthonormal_kernel_fields(g, z, eps)

    def project_onto(phi: RealField) -> RealField:
        acc = np.zeros(phi.values.shape)
        for e in ortho:
            acc = acc + l2_inner(phi, e) * e.values
        return phi.like(acc)

    def project_off(phi: RealField) -> RealField:
        acc = phi.values.copy()
        for e in ortho:
            acc -= l2_inner(phi, e) * e.values
        return phi.like(acc)

    return project_onto, project_off


@dataclass(frozen=True)
class GapEstimate:
    """Spectral-gap estimates on the kernel-orthogonal complement."""

    l2_gap: float
    h2s_gap: float
    minimizer: RealField
    eigenvalues: tuple[float, ...]


def spectral_gap(
    op: LinearizedOperator,
    kernel_basis: tuple[RealField, ...] = (),
    count: int = 6,
    **eigen_kwargs,
) -> GapEstimate:
    """Estimate min ||A phi||_0 / ||phi||_{H^{2s}} over the complement of the kernel.

    The minimum runs over the lowest non-kernel eigenpairs from a deflated
    eigensolve; the L^2 gap min|lambda| is reported alongside.
    """
    g = op.grid
    if kernel_basis:
        cols = np.stack([e.values.ravel() for e in kernel_basis], axis=1)
        cols, _ = np.linalg.qr(cols)
    else:
        cols = None
    result = extremal_eigen(op, count, _constraints=cols, **eigen_kwargs)
    ratios = []
    for f in result.eigenfields:
        num = l2_norm(f.like(op.apply_values(f.values)))
        den = sobolev_norm(f, 2.0 * op.s)
        ratios.append(num / den)
    best = int(np.argmin(ratios))
    return GapEstimate(
        l2_gap=float(min(abs(v) for v in result.eigenvalues)),
        h2s_gap=float(ratios[best]),
        minimizer=result.eigenfields[best],
        eigenvalues=result.eigenvalues,
    )

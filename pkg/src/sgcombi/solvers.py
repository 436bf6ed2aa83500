"""Finite-difference solvers on a single anisotropic grid.

* Poisson ``Laplace u = f``: central differences, matrix-free conjugate
  gradients on the negated (SPD) stencil.
* Transport ``sum_k b_k d_k u = 0`` with ``b_k > 0``: first-order upwinding,
  solved exactly by one marching sweep over anti-diagonal hyperplanes.
* ``u_t - nu Laplace u + b . grad u = 0``: upwinding by the sign of ``b``,
  central diffusion and implicit Euler along the last (time) axis.  Each time
  slab is one sparse LU solve with a factorisation shared by all slabs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import DEFAULT_NODE_CAP, GridFunction, LevelVector, TensorGrid, make_grid
from .problems import ADVECTION, ADVECTION_DIFFUSION, POISSON, ProblemSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    rel_tolerance: float = 1e-10
    max_iterations: int | None = None  # None: 10 * number of unknowns
    node_cap: int = DEFAULT_NODE_CAP

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError(f"rel_tolerance must lie in (0, 1), got {self.rel_tolerance}")
        if self.max_iterations is not None and self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.node_cap <= 0:
            raise ValueError("node_cap must be positive")


@dataclass
class SolveReport:
    grid: LevelVector
    iterations: int = 0
    initial_residual: float = 0.0
    final_residual: float = 0.0
    extra: dict = field(default_factory=dict)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class UnsupportedConfiguration(ValueError):
    pass


def _sample_on(grid: TensorGrid, f) -> np.ndarray:
    return np.array(np.broadcast_to(np.asarray(f(grid.coordinates()), dtype=float), grid.shape))


def _interior(d: int) -> tuple[slice, ...]:
    return (slice(1, -1),) * d


def laplacian_interior(u: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    """Discrete Laplacian of the full node array ``u``, evaluated at interior nodes."""
    d = u.ndim
    inner = _interior(d)
    centre = u[inner]
    out = np.zeros_like(centre)
    for k in range(d):
        lo = list(inner)
        hi = list(inner)
        lo[k] = slice(0, -2)
        hi[k] = slice(2, None)
        out += (u[tuple(lo)] - 2.0 * centre + u[tuple(hi)]) / h[k] ** 2
    return out


def _neg_laplacian_zero_bc(v: np.ndarray, inv_h2: tuple[float, ...]) -> np.ndarray:
    """``-Laplace_h v`` for interior values ``v`` with zero boundary values."""
    out = np.zeros_like(v)
    for k in range(v.ndim):
        c = inv_h2[k]
        out += 2.0 * c * v
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        out[tuple(hi)] -= c * v[tuple(lo)]
        out[tuple(lo)] -= c * v[tuple(hi)]
    return out


def conjugate_gradient(apply, b: np.ndarray, tol: float, max_iter: int):
    """Plain CG from a zero initial guess; stops at ``|r| <= tol |b|``.

    Returns ``(x, iterations, |r| / |b|, converged)``.
    """
    x = np.zeros_like(b)
    r = b.copy()
    rr = float(np.vdot(r, r))
    b_norm = math.sqrt(rr)
    if b_norm == 0.0:
        return x, 0, 0.0, True
    target = (tol * b_norm) ** 2
    p = r.copy()
    it = 0
    while rr > target and it < max_iter:
        ap = apply(p)
        alpha = rr / float(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.vdot(r, r))
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1
    rel = math.sqrt(rr) / b_norm
    return x, it, rel, rr <= target


def solve_poisson(problem: ProblemSpec, levels, cfg: SolverConfig | None = None) -> tuple[GridFunction, SolveReport]:
    """Central differences for ``Laplace u = f`` with Dirichlet data ``g``."""
    cfg = cfg or SolverConfig()
    if problem.kind != POISSON:
        raise UnsupportedConfiguration(f"expected a poisson problem, got {problem.kind}")
    grid = make_grid(levels, cfg.node_cap)
    if grid.dim != problem.dim:
        raise ValueError(f"grid dimension {grid.dim} != problem dimension {problem.dim}")
    u = _sample_on(grid, problem.boundary)
    report = SolveReport(grid.levels)
    if min(grid.shape) < 3:
        # no interior nodes: the grid carries boundary data only
        return GridFunction(grid, u), report

    inner = _interior(grid.dim)
    h = grid.spacing
    inv_h2 = tuple(1.0 / hk**2 for hk in h)
    g = u.copy()
    g[inner] = 0.0
    f = _sample_on(grid, problem.rhs)[inner]
    b = laplacian_interior(g, h) - f

    n_unknowns = b.size
    max_iter = cfg.max_iterations or 10 * n_unknowns
    x, iters, rel, ok = conjugate_gradient(
        lambda v: _neg_laplacian_zero_bc(v, inv_h2), b, cfg.rel_tolerance, max_iter
    )
    report.iterations = iters
    report.initial_residual = float(np.linalg.norm(b))
    report.final_residual = rel * report.initial_residual
    if not ok:
        raise ConvergenceError(
            f"CG did not reach {cfg.rel_tolerance:g} on grid {grid.levels} "
            f"after {iters} iterations (relative residual {rel:.3e})",
            report,
        )
    u[inner] = x
    return GridFunction(grid, u), report


def _hyperplane_order(shape: tuple[int, ...]) -> list[np.ndarray]:
    """Flat indices grouped by index sum, excluding nodes on any ``x_k = 0`` face."""
    idx = np.indices(shape).reshape(len(shape), -1)
    keep = np.all(idx > 0, axis=0)
    flat = np.flatnonzero(keep)
    sums = idx[:, keep].sum(axis=0)
    order = np.argsort(sums, kind="stable")
    flat, sums = flat[order], sums[order]
    cuts = np.flatnonzero(np.diff(sums)) + 1
    return np.split(flat, cuts)


def solve_advection(problem: ProblemSpec, levels, cfg: SolverConfig | None = None) -> tuple[GridFunction, SolveReport]:
    """Upwind transport with positive velocities, time being one of the axes.

    Every node off the inflow faces is the convex combination
    ``sum_k w_k u(. - e_k h_k)`` with ``w_k ~ b_k / h_k``, which is the
    exact solution of the lower-triangular upwind system.
    """
    cfg = cfg or SolverConfig()
    if problem.kind != ADVECTION:
        raise UnsupportedConfiguration(f"expected an advection problem, got {problem.kind}")
    b = problem.velocity or (1.0,) * problem.dim
    if any(bk <= 0 for bk in b):
        raise UnsupportedConfiguration(f"upwind direction is fixed: velocities must be > 0, got {b}")
    grid = make_grid(levels, cfg.node_cap)
    if grid.dim != problem.dim:
        raise ValueError(f"grid dimension {grid.dim} != problem dimension {problem.dim}")
    u = _sample_on(grid, problem.boundary)
    flat = u.ravel()  # view: writes go into u
    coef = np.array([bk / hk for bk, hk in zip(b, grid.spacing)])
    weights = coef / coef.sum()
    strides = np.array(u.strides) // u.itemsize
    for plane in _hyperplane_order(grid.shape):
        acc = np.zeros(plane.size)
        for k in range(grid.dim):
            acc += weights[k] * flat[plane - strides[k]]
        flat[plane] = acc
    report = SolveReport(grid.levels, extra={"sweeps": 1})
    return GridFunction(grid, u), report


def _upwind_1d(n_nodes: int, h: float, b: float) -> sp.csr_matrix:
    """``b * d/dx`` by one-sided differences taken from the upwind side."""
    if b >= 0:
        diag = np.full(n_nodes, b / h)
        off = np.full(n_nodes - 1, -b / h)
        return sp.diags([off, diag], [-1, 0], format="csr")
    diag = np.full(n_nodes, -b / h)
    off = np.full(n_nodes - 1, b / h)
    return sp.diags([diag, off], [0, 1], format="csr")


def _second_diff_1d(n_nodes: int, h: float) -> sp.csr_matrix:
    main = np.full(n_nodes, -2.0 / h**2)
    off = np.full(n_nodes - 1, 1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def _kron_sum(ops: list[sp.spmatrix]) -> sp.csr_matrix:
    """``sum_k I x .. x op_k x .. x I`` in C (last axis fastest) order."""
    sizes = [op.shape[0] for op in ops]
    total = None
    for k, op in enumerate(ops):
        left = sp.identity(math.prod(sizes[:k]), format="csr")
        right = sp.identity(math.prod(sizes[k + 1 :]), format="csr")
        term = sp.kron(sp.kron(left, op), right, format="csr")
        total = term if total is None else total + term
    return total.tocsr()


def transport_operator(shape: tuple[int, ...], h: tuple[float, ...], velocity, nu: float) -> sp.csr_matrix:
    """``b . grad_upwind - nu Laplace_h`` on all nodes of a spatial grid."""
    ops = [
        _upwind_1d(n, hk, bk) - nu * _second_diff_1d(n, hk)
        for n, hk, bk in zip(shape, h, velocity)
    ]
    return _kron_sum(ops)


def solve_advection_diffusion(
    problem: ProblemSpec, levels, cfg: SolverConfig | None = None
) -> tuple[GridFunction, SolveReport]:
    """Implicit Euler on the space-time grid; ``dt = 2**-i_t`` with final time 1."""
    cfg = cfg or SolverConfig()
    if problem.kind != ADVECTION_DIFFUSION:
        raise UnsupportedConfiguration(f"expected an advection-diffusion problem, got {problem.kind}")
    grid = make_grid(levels, cfg.node_cap)
    if grid.dim != problem.dim:
        raise ValueError(f"grid dimension {grid.dim} != problem dimension {problem.dim}")
    ds = grid.dim - 1
    space_shape = grid.shape[:ds]
    space_h = grid.spacing[:ds]
    n_steps = grid.shape[-1] - 1
    dt = grid.spacing[-1]
    velocity = problem.velocity or (0.0,) * ds

    u = np.empty(grid.shape)
    space = TensorGrid(grid.levels[:ds])
    xs = space.coordinates()
    u[..., 0] = np.broadcast_to(np.asarray(problem.initial(xs), dtype=float), space_shape)
    report = SolveReport(grid.levels, extra={"steps": n_steps})

    interior = ~space.boundary_mask().ravel()
    if not interior.any():
        t_axis = grid.axis(ds)
        for s in range(1, n_steps + 1):
            u[..., s] = _boundary_values(problem, xs, t_axis[s], space_shape)
        return GridFunction(grid, u), report

    op = transport_operator(space_shape, space_h, velocity, problem.nu)
    n_space = op.shape[0]
    system = (sp.identity(n_space, format="csr") + dt * op).tocsr()
    a_ii = system[interior][:, interior].tocsc()
    a_ib = system[interior][:, ~interior]
    lu = splu(a_ii)
    a_norm = float(abs(a_ii).sum(axis=1).max())
    t_axis = grid.axis(ds)
    worst = 0.0
    for s in range(1, n_steps + 1):
        old = u[..., s - 1].ravel()
        bnd = _boundary_values(problem, xs, t_axis[s], space_shape).ravel()
        rhs = old[interior] - a_ib @ bnd[~interior]
        new = bnd.copy()
        new[interior] = lu.solve(rhs)
        # normwise backward error of the direct solve
        res = np.abs(a_ii @ new[interior] - rhs).max()
        scale = a_norm * np.abs(new[interior]).max() + np.abs(rhs).max()
        if scale > 0.0:
            worst = max(worst, res / scale)
        u[..., s] = new.reshape(space_shape)
    report.final_residual = worst
    if worst > cfg.rel_tolerance:
        raise ConvergenceError(f"slab residual {worst:.3e} above tolerance on grid {grid.levels}", report)
    return GridFunction(grid, u), report


def _boundary_values(problem: ProblemSpec, xs, t: float, space_shape) -> np.ndarray:
    if problem.boundary is None:
        return np.zeros(space_shape)
    vals = problem.boundary([*xs, np.float64(t)])
    return np.array(np.broadcast_to(np.asarray(vals, dtype=float), space_shape))


SOLVERS = {
    POISSON: solve_poisson,
    ADVECTION: solve_advection,
    ADVECTION_DIFFUSION: solve_advection_diffusion,
}


def solve(problem: ProblemSpec, levels, cfg: SolverConfig | None = None) -> tuple[GridFunction, SolveReport]:
    """Dispatch on ``problem.kind``."""
    return SOLVERS[problem.kind](problem, levels, cfg)

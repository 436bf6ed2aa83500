"""Multilinear interpolation on tensor grids and the trapezoidal cubature it induces."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from itertools import combinations, product

import numpy as np
from scipy.integrate import trapezoid

from .grid import DataError, GridFunction, LevelVector

INTERP_CONSTANT = 4.0 / 27.0


def _locate(levels: LevelVector, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell index and local coordinate per axis for points ``x`` of shape ``(m, d)``.

    Interior faces belong to the lower cell.
    """
    cells = np.empty(x.shape, dtype=np.int64)
    local = np.empty(x.shape, dtype=float)
    for k, i in enumerate(levels):
        n_cells = 2**i
        s = x[:, k] * n_cells
        j = np.clip(np.ceil(s).astype(np.int64) - 1, 0, n_cells - 1)
        cells[:, k] = j
        local[:, k] = s - j
    return cells, local


def interp_points(gf: GridFunction, points) -> np.ndarray:
    """Vectorised multilinear interpolation at an ``(m, d)`` array of points."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = gf.grid.dim
    if x.shape[1] != d:
        raise ValueError(f"points have dimension {x.shape[1]}, grid has {d}")
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise ValueError("evaluation point outside [0, 1]^d")
    cells, local = _locate(gf.levels, x)
    # corner values, shape (m, 2, ..., 2), then one lerp per axis; taking the
    # lerp from the nearer end is exact at nodes and on constant data
    corners = np.empty((x.shape[0],) + (2,) * d)
    for corner in product((0, 1), repeat=d):
        idx = tuple(cells[:, k] + c for k, c in enumerate(corner))
        corners[(slice(None), *corner)] = gf.values[idx]
    for k in reversed(range(d)):
        s = local[:, k].reshape((-1,) + (1,) * k)
        lo, hi = corners[..., 0], corners[..., 1]
        corners = np.where(s < 0.5, lo + s * (hi - lo), hi - (1.0 - s) * (hi - lo))
    return corners


def interp_eval(gf: GridFunction, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(interp_points(gf, x[None, :])[0])


def trapezoidal_integral(gf: GridFunction) -> float:
    """Integral over the unit cube of the multilinear interpolant of ``gf``."""
    values = gf.values
    for k in reversed(range(gf.grid.dim)):
        values = trapezoid(values, dx=gf.grid.spacing[k], axis=k)
    return float(values)


def interp_error_budget(mixed_bounds: Mapping, levels: Sequence[int]) -> float:
    """Upper bound for the multilinear interpolation error on a grid.

    ``mixed_bounds`` maps each nonempty subset of axes (a tuple of 0-based
    axis indices, in any order) to a bound on the sup norm of the
    corresponding mixed second derivative.  Each subset contributes
    ``(4/27)^m * bound * prod h_j^2``.
    """
    bounds = {tuple(sorted(key)): float(val) for key, val in mixed_bounds.items()}
    h = [2.0**-i for i in levels]
    d = len(h)
    total = 0.0
    for m in range(1, d + 1):
        for subset in combinations(range(d), m):
            if subset not in bounds:
                raise DataError(f"no mixed-derivative bound for axes {subset}")
            total += INTERP_CONSTANT**m * bounds[subset] * np.prod([h[j] ** 2 for j in subset])
    return float(total)


def uniform_mixed_bounds(d: int, bound_of_order) -> dict[tuple[int, ...], float]:
    """Subset bounds depending only on the subset size ``m`` (``bound_of_order(m)``)."""
    return {
        subset: float(bound_of_order(m))
        for m in range(1, d + 1)
        for subset in combinations(range(d), m)
    }

"""Combination-technique solutions assembled from component-grid solves."""

from __future__ import annotations

import json
import logging
import threading
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .combinatorics import truncated_coefficients
from .grid import (
    GridFunction,
    LevelVector,
    TensorGrid,
    as_levels,
    enumerate_index_set,
    enumerate_level_set,
    make_grid,
    sample,
)
from .interp import interp_eval, interp_points
from .problems import ProblemSpec
from .solvers import SolverConfig, solve

log = logging.getLogger(__name__)


class ComponentSolveError(RuntimeError):
    """A component-grid solve failed; ``levels`` names the grid."""

    def __init__(self, levels: LevelVector, cause: BaseException):
        super().__init__(f"solve on grid {levels} failed: {cause}")
        self.levels = levels
        self.cause = cause


def _solve_values(problem: ProblemSpec, cfg: SolverConfig, levels: LevelVector):
    gf, report = solve(problem, levels, cfg)
    return gf.values, report


def _solve_point(problem: ProblemSpec, cfg: SolverConfig, levels: LevelVector, x: tuple[float, ...]):
    gf, _ = solve(problem, levels, cfg)
    return interp_eval(gf, x)


class SolverHandle:
    """Maps a level vector to the solution on that grid, with a per-run cache.

    ``workers > 1`` runs missing component solves in a process pool when
    several grids are requested at once (see :meth:`prefetch`).  Results do not
    depend on the schedule.
    """

    def __init__(
        self,
        problem: ProblemSpec | None = None,
        cfg: SolverConfig | None = None,
        workers: int = 1,
        solver=None,
        dim: int | None = None,
    ):
        if problem is None and solver is None:
            raise ValueError("need a problem or a solver callable")
        self.problem = problem
        self.cfg = cfg or SolverConfig()
        self.workers = max(1, int(workers))
        self.dim = dim if dim is not None else problem.dim
        self._solver = solver
        self._cache: dict[LevelVector, GridFunction] = {}
        self._points: dict[tuple[LevelVector, tuple[float, ...]], float] = {}
        self.reports: dict[LevelVector, object] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_function(cls, fn, dim: int) -> SolverHandle:
        """Handle whose "solution" on each grid is ``fn`` sampled at the nodes."""
        return cls(solver=lambda levels: (sample(make_grid(levels), fn), None), dim=dim)

    def _solve_one(self, levels: LevelVector):
        if self._solver is not None:
            return self._solver(levels)
        return solve(self.problem, levels, self.cfg)

    def __call__(self, levels: Sequence[int]) -> GridFunction:
        lv = as_levels(levels)
        with self._lock:
            hit = self._cache.get(lv)
        if hit is not None:
            return hit
        try:
            gf, report = self._solve_one(lv)
        except Exception as exc:
            raise ComponentSolveError(lv, exc) from exc
        with self._lock:
            self._cache.setdefault(lv, gf)
            self.reports[lv] = report
            return self._cache[lv]

    def prefetch(self, levels_list: Iterable[Sequence[int]]) -> None:
        """Solve all uncached grids, concurrently when ``workers > 1``."""
        todo = []
        with self._lock:
            for lv in map(as_levels, levels_list):
                if lv not in self._cache and lv not in todo:
                    todo.append(lv)
        if not todo:
            return
        if self.workers == 1 or self._solver is not None or len(todo) == 1:
            for lv in todo:
                self(lv)
            return
        # largest grids first keeps the pool busy
        todo.sort(key=lambda lv: -sum(lv))
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            futures = {lv: pool.submit(_solve_values, self.problem, self.cfg, lv) for lv in todo}
            for lv, fut in futures.items():
                try:
                    values, report = fut.result()
                except Exception as exc:
                    raise ComponentSolveError(lv, exc) from exc
                with self._lock:
                    self._cache.setdefault(lv, GridFunction(TensorGrid(lv), values))
                    self.reports[lv] = report

    def values_at(self, levels_list: Iterable[Sequence[int]], x) -> dict[LevelVector, float]:
        """Component values at one point, without keeping the grids.

        Used by the error measurements, where only ``U(i)(x)`` is needed and
        holding every grid of a high-dimensional run would not fit in memory.
        """
        x = tuple(float(v) for v in x)
        wanted = list(dict.fromkeys(map(as_levels, levels_list)))
        with self._lock:
            todo = [lv for lv in wanted if (lv, x) not in self._points]
            for lv in [lv for lv in todo if lv in self._cache]:
                self._points[(lv, x)] = interp_eval(self._cache[lv], x)
            todo = [lv for lv in todo if (lv, x) not in self._points]
        if todo and self.workers > 1 and self._solver is None and len(todo) > 1:
            todo.sort(key=lambda lv: -sum(lv))
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = {lv: pool.submit(_solve_point, self.problem, self.cfg, lv, x) for lv in todo}
                for lv, fut in futures.items():
                    try:
                        value = fut.result()
                    except Exception as exc:
                        raise ComponentSolveError(lv, exc) from exc
                    with self._lock:
                        self._points[(lv, x)] = value
        else:
            for lv in todo:
                try:
                    gf, report = self._solve_one(lv)
                except Exception as exc:
                    raise ComponentSolveError(lv, exc) from exc
                with self._lock:
                    self._points[(lv, x)] = interp_eval(gf, x)
                    self.reports[lv] = report
        with self._lock:
            return {lv: self._points[(lv, x)] for lv in wanted}

    def cached(self) -> list[LevelVector]:
        with self._lock:
            return sorted(self._cache)


@dataclass(frozen=True)
class CombinationSolution:
    level: int
    dim: int
    terms: tuple[tuple[int, GridFunction], ...]

    @property
    def truncated(self) -> bool:
        """True below level ``d - 1``, where the coefficient pattern is cut off."""
        return self.level < self.dim - 1

    @property
    def dof(self) -> int:
        return sum(gf.grid.n_nodes for _, gf in self.terms)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def export(self, directory: str | Path) -> Path:
        """Write one value file per term plus ``manifest.json``; returns the manifest path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for coef, gf in self.terms:
            name = "grid_" + "_".join(str(i) for i in gf.levels) + ".txt"
            gf.save(directory / name)
            entries.append({"coefficient": coef, "levels": list(gf.levels), "path": name})
        manifest = directory / "manifest.json"
        manifest.write_text(
            json.dumps(
                {"level": self.level, "dim": self.dim, "truncated": self.truncated, "terms": entries},
                indent=2,
            )
            + "\n"
        )
        return manifest


def combination_terms(d: int, n: int) -> list[tuple[int, LevelVector]]:
    """``(coefficient, level vector)`` pairs of the level-``n`` combination, sorted by levels."""
    coefs = truncated_coefficients(d, n)
    terms = []
    for j, c in enumerate(coefs):
        if c == 0:
            continue
        terms.extend((c, lv) for lv in enumerate_level_set(d, n - j))
    terms.sort(key=lambda t: t[1])
    return terms


def combine(solver: SolverHandle, d: int, n: int) -> CombinationSolution:
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    plan = combination_terms(d, n)
    solver.prefetch(lv for _, lv in plan)
    terms = tuple((c, solver(lv)) for c, lv in plan)
    return CombinationSolution(n, d, terms)


def evaluate(cs: CombinationSolution, x, reverse: bool = False) -> float:
    """Sum of ``coefficient * interpolant(x)`` in stored (or reversed) term order."""
    x = tuple(float(v) for v in x)
    terms = reversed(cs.terms) if reverse else cs.terms
    total = 0.0
    for coef, gf in terms:
        total += coef * interp_eval(gf, x)
    return total


def surplus_grids(levels: Sequence[int]) -> list[tuple[int, LevelVector]]:
    """Signed grids of the tensorised difference, truncated on zero levels."""
    lv = as_levels(levels)
    active = [k for k, i in enumerate(lv) if i > 0]
    out = []
    for m in range(len(active) + 1):
        for subset in combinations(active, m):
            shifted = tuple(i - (k in subset) for k, i in enumerate(lv))
            out.append(((-1) ** m, shifted))
    return out


def surplus_at(solver: SolverHandle, levels: Sequence[int], x) -> float:
    """Hierarchical surplus of grid ``levels`` at the point ``x``."""
    plan = surplus_grids(levels)
    solver.prefetch(lv for _, lv in plan)
    x = tuple(float(v) for v in x)
    return sum(sign * interp_eval(solver(lv), x) for sign, lv in plan)


def surplus_sum(solver: SolverHandle, d: int, n: int, x) -> float:
    """``sum_{|i| <= n}`` of surpluses; equals the level-``n`` combination at ``x``."""
    return float(sum(surplus_at(solver, i, x) for i in enumerate_index_set(d, n)))


def full_grid_reference(solver: SolverHandle, n: int, d: int) -> GridFunction:
    return solver((n,) * d)


def surplus_norm(solver: SolverHandle, levels: Sequence[int], probes: np.ndarray) -> float:
    """Max of ``|surplus|`` over a set of probe points."""
    plan = surplus_grids(levels)
    total = np.zeros(len(probes))
    for sign, lv in plan:
        total += sign * interp_points(solver(lv), probes)
    return float(np.abs(total).max())

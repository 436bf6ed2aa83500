"""Anisotropic dyadic tensor-product grids on the unit cube."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LevelVector = tuple[int, ...]

MAX_DIM = 12
DEFAULT_NODE_CAP = 2**24


class CapacityError(RuntimeError):
    """A grid would exceed the configured node budget."""


class DataError(ValueError):
    """Sampled or supplied data is not finite / incomplete."""


def as_levels(levels: Sequence[int]) -> LevelVector:
    lv = tuple(int(i) for i in levels)
    if not lv:
        raise ValueError("level vector must have at least one entry")
    if any(i < 0 for i in lv):
        raise ValueError(f"levels must be nonnegative, got {lv}")
    return lv


def node_count(levels: Sequence[int]) -> int:
    count = 1
    for i in levels:
        count *= 2**i + 1
    return count


@dataclass(frozen=True)
class TensorGrid:
    """Grid with ``2**i_k + 1`` equispaced nodes (boundary included) per axis."""

    levels: LevelVector

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2**i + 1 for i in self.levels)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0**-i for i in self.levels)

    @property
    def n_nodes(self) -> int:
        return node_count(self.levels)

    def axis(self, k: int) -> np.ndarray:
        # j * 2**-i is exact in binary floating point
        return np.arange(2 ** self.levels[k] + 1, dtype=float) / 2.0 ** self.levels[k]

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis (``np.ix_`` layout)."""
        return list(np.ix_(*(self.axis(k) for k in range(self.dim))))

    def points(self) -> np.ndarray:
        """All nodes as an ``(n_nodes, d)`` array in lexicographic order."""
        mesh = np.meshgrid(*(self.axis(k) for k in range(self.dim)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[k] = 0
            mask[tuple(idx)] = True
            idx[k] = -1
            mask[tuple(idx)] = True
        return mask


def make_grid(levels: Sequence[int], node_cap: int = DEFAULT_NODE_CAP) -> TensorGrid:
    lv = as_levels(levels)
    if len(lv) > MAX_DIM:
        raise ValueError(f"dimension {len(lv)} above the supported maximum {MAX_DIM}")
    count = node_count(lv)
    if count > node_cap:
        raise CapacityError(f"grid {lv} has {count} nodes, cap is {node_cap}")
    return TensorGrid(lv)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values on one grid; ``values`` has shape ``grid.shape`` (C order)."""

    grid: TensorGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise DataError(f"non-finite values on grid {self.grid.levels}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def levels(self) -> LevelVector:
        return self.grid.levels

    def __call__(self, x):
        from .interp import interp_eval

        return interp_eval(self, x)

    def save(self, path: str | Path) -> None:
        """Plain text: a ``d`` line, a levels line, then one value per line."""
        path = Path(path)
        with path.open("w") as fh:
            fh.write(f"{self.grid.dim}\n")
            fh.write(" ".join(str(i) for i in self.levels) + "\n")
            for v in self.values.ravel().tolist():
                fh.write(f"{v!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> GridFunction:
        lines = Path(path).read_text().splitlines()
        d = int(lines[0])
        levels = as_levels(lines[1].split())
        if len(levels) != d:
            raise DataError(f"header says d={d} but lists {len(levels)} levels")
        grid = TensorGrid(levels)
        values = np.array([float(s) for s in lines[2:]], dtype=float)
        if values.size != grid.n_nodes:
            raise DataError(f"expected {grid.n_nodes} values, found {values.size}")
        return cls(grid, values)


def sample(grid: TensorGrid, f: Callable) -> GridFunction:
    """Evaluate ``f`` at every node.

    ``f`` is called once with a list of broadcastable coordinate arrays (one
    per axis); scalar-only callables are not supported.
    """
    values = np.broadcast_to(np.asarray(f(grid.coordinates()), dtype=float), grid.shape)
    if not np.all(np.isfinite(values)):
        raise DataError(f"function is not finite on all nodes of {grid.levels}")
    return GridFunction(grid, np.array(values))


def enumerate_level_set(d: int, level: int) -> list[LevelVector]:
    """All ``i`` in ``N_0^d`` with ``|i| = level``, lexicographically sorted."""
    if d < 1 or level < 0:
        raise ValueError(f"need d >= 1 and level >= 0, got d={d}, level={level}")
    if d == 1:
        return [(level,)]
    out = []
    for first in range(level + 1):
        for rest in enumerate_level_set(d - 1, level - first):
            out.append((first, *rest))
    return out


def enumerate_index_set(d: int, n: int) -> list[LevelVector]:
    """The sparse index set ``{i : |i| <= n}``, grouped by level, each group sorted."""
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    out = []
    for level in range(n + 1):
        out.extend(enumerate_level_set(d, level))
    return out

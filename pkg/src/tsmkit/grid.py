"""Regular lattices over a box, dense point sets and per-point labels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .system import DomainError, ParameterError, UsageError


@dataclass(frozen=True, eq=False)
class Grid:
    """Lattice with ``points_per_axis[i]`` equally spaced points on ``[lower[i], upper[i]]``.

    Both faces of the box are lattice planes. Points are numbered in
    row-major (C) order of their per-axis indices.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points_per_axis: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        shape = tuple(int(v) for v in np.atleast_1d(self.points_per_axis))
        if not (len(lo) == len(hi) == len(shape)) or not lo:
            raise ParameterError("lower, upper and points_per_axis must have equal nonzero length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ParameterError("lower < upper must hold componentwise")
        if any(k < 2 for k in shape):
            raise ParameterError("need at least two points per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points_per_axis", shape)

    @classmethod
    def cube(cls, n: int, points: int, lower: float = 0.0, upper: float = 1.0) -> "Grid":
        return cls((lower,) * n, (upper,) * n, (points,) * n)

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.lower, self.upper, self.points_per_axis) == (
            other.lower, other.upper, other.points_per_axis)

    def __hash__(self):
        return hash((self.lower, self.upper, self.points_per_axis))

    def __repr__(self):
        return f"Grid(lower={self.lower}, upper={self.upper}, points_per_axis={self.points_per_axis})"

    @property
    def n(self) -> int:
        return len(self.points_per_axis)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    @cached_property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / (np.asarray(self.shape) - 1)

    @property
    def h(self) -> float:
        """Covering radius: every box point is within ``h`` of a lattice point."""
        return 0.5 * float(np.linalg.norm(self.spacing))

    @cached_property
    def points(self) -> np.ndarray:
        """All lattice points, shape ``(size, n)``."""
        axes = [np.linspace(lo, hi, k) for lo, hi, k in zip(self.lower, self.upper, self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        pts.flags.writeable = False
        return pts

    def point_of(self, index) -> np.ndarray:
        index = np.asarray(index)
        if np.any(index < 0) or np.any(index >= self.size):
            raise DomainError("lattice index out of range")
        multi = np.stack(np.unravel_index(index, self.shape), axis=-1)
        return np.asarray(self.lower) + multi * self.spacing

    def index_of(self, x) -> np.ndarray | int:
        """Index of the nearest lattice point (ties round up)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise DomainError(f"expected points of dimension {self.n}")
        if np.any(x < np.asarray(self.lower)) or np.any(x > np.asarray(self.upper)) \
                or not np.all(np.isfinite(x)):
            raise DomainError("point outside the grid box")
        multi = np.floor((x - np.asarray(self.lower)) / self.spacing + 0.5).astype(np.int64)
        multi = np.minimum(multi, np.asarray(self.shape) - 1)
        idx = np.ravel_multi_index(tuple(np.moveaxis(multi, -1, 0)), self.shape)
        return int(idx) if np.ndim(idx) == 0 else idx

    def _stencil(self, radius: float) -> np.ndarray:
        span = np.floor(2.0 * radius / self.spacing).astype(int) + 2
        return np.array(list(itertools.product(*(range(k) for k in span))), dtype=np.int64)

    def ball_pairs(self, centers, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """All ``(row, index)`` with ``|point(index) - centers[row]| <= radius``.

        Rows come out in nondecreasing order and indices ascending within a row.
        """
        if not radius >= 0:
            raise ParameterError("radius must be nonnegative")
        centers = np.asarray(centers, dtype=float).reshape(-1, self.n)
        lower = np.asarray(self.lower)
        shape = np.asarray(self.shape)
        first = np.ceil((centers - radius - lower) / self.spacing - 1e-9).astype(np.int64)
        stencil = self._stencil(radius)
        strides = np.array([int(np.prod(self.shape[i + 1:])) for i in range(self.n)], dtype=np.int64)
        r2 = radius * radius * (1.0 + 1e-12) + 1e-300
        rows_out, idx_out = [], []
        for off in stencil:
            multi = first + off
            ok = np.all((multi >= 0) & (multi < shape), axis=1)
            d2 = np.sum((lower + multi * self.spacing - centers) ** 2, axis=1)
            ok &= d2 <= r2
            rows = np.nonzero(ok)[0]
            rows_out.append(rows)
            idx_out.append(multi[rows] @ strides)
        rows = np.concatenate(rows_out)
        idx = np.concatenate(idx_out)
        order = np.lexsort((idx, rows))
        return rows[order], idx[order]

    def ball_query(self, center, radius: float) -> "PointSet":
        """Lattice points within Euclidean distance ``radius`` of ``center``."""
        center = np.asarray(center, dtype=float)
        if center.shape != (self.n,):
            raise DomainError(f"center must have shape ({self.n},)")
        _, idx = self.ball_pairs(center[None, :], radius)
        return PointSet.from_indices(self, idx)


class PointSet:
    """Subset of a grid's lattice points stored as a dense membership mask."""

    __slots__ = ("grid", "mask")

    def __init__(self, grid: Grid, mask):
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        if mask.size != grid.size:
            raise UsageError("mask size does not match grid size")
        self.grid = grid
        self.mask = mask

    @classmethod
    def empty(cls, grid: Grid) -> "PointSet":
        return cls(grid, np.zeros(grid.size, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "PointSet":
        return cls(grid, np.ones(grid.size, dtype=bool))

    @classmethod
    def from_indices(cls, grid: Grid, indices) -> "PointSet":
        mask = np.zeros(grid.size, dtype=bool)
        mask[np.asarray(indices, dtype=np.int64)] = True
        return cls(grid, mask)

    @classmethod
    def from_predicate(cls, grid: Grid, predicate: Callable[[np.ndarray], np.ndarray]) -> "PointSet":
        """Members are the lattice points where the vectorized ``predicate`` holds."""
        return cls(grid, np.asarray(predicate(grid.points), dtype=bool))

    def _check(self, other: "PointSet"):
        if not isinstance(other, PointSet):
            return NotImplemented
        if other.grid != self.grid:
            raise UsageError("point sets live on different grids")

    def __or__(self, other):
        self._check(other)
        return PointSet(self.grid, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return PointSet(self.grid, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return PointSet(self.grid, self.mask & ~other.mask)

    def __invert__(self):
        return PointSet(self.grid, ~self.mask)

    union = __or__
    intersection = __and__
    difference = __sub__

    def complement(self) -> "PointSet":
        return ~self

    def __len__(self):
        return int(np.count_nonzero(self.mask))

    cardinality = __len__

    def __bool__(self):
        return bool(self.mask.any())

    def __contains__(self, index) -> bool:
        return bool(self.mask[int(index)])

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))

    def issubset(self, other: "PointSet") -> bool:
        self._check(other)
        return not np.any(self.mask & ~other.mask)

    __le__ = issubset

    def isdisjoint(self, other: "PointSet") -> bool:
        self._check(other)
        return not np.any(self.mask & other.mask)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def points(self) -> np.ndarray:
        return self.grid.points[self.mask]

    def copy(self) -> "PointSet":
        return PointSet(self.grid, self.mask.copy())

    def __repr__(self):
        return f"PointSet({len(self)}/{self.grid.size})"


class LabelArray:
    """One small-integer region code per lattice point."""

    __slots__ = ("grid", "codes")

    def __init__(self, grid: Grid, codes):
        codes = np.asarray(codes, dtype=np.uint8).reshape(-1)
        if codes.size != grid.size:
            raise UsageError("label array size does not match grid size")
        self.grid = grid
        self.codes = codes

    def __getitem__(self, index):
        return self.codes[index]

    def members(self, code: int) -> PointSet:
        return PointSet(self.grid, self.codes == code)

    def counts(self, ncodes: int) -> np.ndarray:
        return np.bincount(self.codes, minlength=ncodes)

    def __eq__(self, other):
        return isinstance(other, LabelArray) and self.grid == other.grid and np.array_equal(
            self.codes, other.codes)

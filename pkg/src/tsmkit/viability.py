"""Saint-Pierre viability kernels and capture basins on a lattice.

Each lattice point ``x`` and control ``u`` gets the successor set

    S(x, u) = { y in grid : |y - (x + f(x, u) dt)| <= expansion }

and the kernel/basin iterations run on the resulting directed graph. Both
iterations only ask whether *some* control has *some* successor in the
current set, so they work on the union of the per-control edge sets.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import Grid, PointSet
from .system import ControlledSystem, ParameterError, UsageError

log = logging.getLogger(__name__)

GUARANTEED = "guaranteed"
STRICT = "strict"
DEFAULT_LIPSCHITZ = 10.0
DEFAULT_DT_FACTOR = 1.5
CHUNK = 1 << 16


@dataclass(frozen=True)
class SuccessorConfig:
    """Euler step ``dt`` and the ball radius ``expansion`` around its endpoint."""

    dt: float
    expansion: float
    mode: str = GUARANTEED
    lipschitz: float | None = None
    rhs_bound: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ParameterError("dt must be positive")
        if not (np.isfinite(self.expansion) and self.expansion >= 0):
            raise ParameterError("expansion radius must be nonnegative")
        if self.mode not in (GUARANTEED, STRICT):
            raise ParameterError(f"expansion mode must be {GUARANTEED!r} or {STRICT!r}")

    @classmethod
    def for_grid(cls, grid: Grid, mode: str = GUARANTEED, dt: float | None = None,
                 lipschitz: float = DEFAULT_LIPSCHITZ, rhs_bound: float = 1.0,
                 dt_factor: float = DEFAULT_DT_FACTOR) -> "SuccessorConfig":
        """Defaults for a homogenized system (speed bound 1).

        ``guaranteed`` uses ``h + (M l / 2) dt^2``; ``strict`` uses ``h``.
        """
        if dt is None:
            dt = dt_factor * float(np.min(grid.spacing))
        if mode == GUARANTEED:
            expansion = grid.h + 0.5 * rhs_bound * lipschitz * dt * dt
        elif mode == STRICT:
            expansion = grid.h
        else:
            raise ParameterError(f"unknown expansion mode {mode!r}")
        return cls(float(dt), float(expansion), mode, float(lipschitz), float(rhs_bound))


def estimate_lipschitz(sys: ControlledSystem, grid: Grid, samples: int = 1000,
                       seed: int = 0, step: float | None = None) -> float:
    """Largest finite-difference slope of ``sys`` over random lattice points."""
    rng = np.random.default_rng(seed)
    step = 0.5 * float(np.min(grid.spacing)) if step is None else step
    lo, hi = np.asarray(grid.lower), np.asarray(grid.upper)
    best = 0.0
    for u in sys.controls:
        x = grid.points[rng.integers(0, grid.size, samples)]
        d = rng.normal(size=x.shape)
        d *= step / np.linalg.norm(d, axis=1, keepdims=True)
        x2 = np.clip(x + d, lo, hi)
        dist = np.linalg.norm(x2 - x, axis=1)
        ok = dist > 0
        diff = np.linalg.norm(sys(x2[ok], u) - sys(x[ok], u), axis=1)
        best = max(best, float(np.max(diff / dist[ok], initial=0.0)))
    return best


def _gather(indptr: np.ndarray, data: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Concatenate ``data[indptr[r]:indptr[r+1]]`` over ``rows``."""
    starts = indptr[rows]
    lengths = indptr[rows + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=data.dtype)
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return data[offsets + np.arange(total)]


def _csr(rows: np.ndarray, cols: np.ndarray, nrows: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR arrays from ``(row, col)`` pairs already sorted by row."""
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nrows), out=indptr[1:])
    return indptr, cols.astype(np.int32, copy=False)


class SuccessorMap:
    """Materialized successor sets per (lattice index, control) in CSR layout."""

    def __init__(self, grid: Grid, controls: Sequence[str], default: str,
                 adjacency: dict[str, tuple[np.ndarray, np.ndarray]],
                 config: SuccessorConfig | None = None):
        self.grid = grid
        self.controls = tuple(controls)
        self.default = default
        self.config = config
        self._adj = adjacency
        self._union: dict[tuple[str, ...], tuple] = {}
        if default not in self.controls:
            raise ParameterError("default control missing from successor map")

    @classmethod
    def build(cls, grid: Grid, sys: ControlledSystem, cfg: SuccessorConfig,
              controls: Sequence[str] | None = None, workers: int = 1) -> "SuccessorMap":
        controls = sys.check_controls(controls)
        if sys.dimension != grid.n:
            raise UsageError("system and grid dimensions differ")
        if cfg.expansion < grid.h * (1 - 1e-12):
            raise ParameterError(f"expansion {cfg.expansion} is below the covering radius h={grid.h}")
        pts = grid.points
        starts = range(0, grid.size, CHUNK)

        def chunk(u, s):
            x = pts[s:s + CHUNK]
            end = x + sys(x, u) * cfg.dt
            rows, idx = grid.ball_pairs(end, cfg.expansion)
            return rows + s, idx

        adjacency = {}
        for u in controls:
            if workers > 1:
                with ThreadPoolExecutor(workers) as pool:
                    parts = list(pool.map(lambda s: chunk(u, s), starts))
            else:
                parts = [chunk(u, s) for s in starts]
            rows = np.concatenate([p[0] for p in parts])
            idx = np.concatenate([p[1] for p in parts])
            adjacency[u] = _csr(rows, idx, grid.size)
            log.debug("successors for %s: %d edges", u, idx.size)
        return cls(grid, controls, sys.default, adjacency, cfg)

    @classmethod
    def from_adjacency(cls, grid: Grid, adjacency: dict[str, Sequence[Sequence[int]]],
                       default: str | None = None) -> "SuccessorMap":
        """Wrap explicit successor lists ``adjacency[u][node]``."""
        controls = tuple(adjacency)
        default = controls[0] if default is None else default
        adj = {}
        for u, lists in adjacency.items():
            if len(lists) != grid.size:
                raise UsageError("adjacency must list successors for every lattice index")
            lists = [sorted(set(int(c) for c in s)) for s in lists]
            rows = np.repeat(np.arange(grid.size), [len(s) for s in lists])
            cols = np.array([c for s in lists for c in s], dtype=np.int64)
            if cols.size and (cols.min() < 0 or cols.max() >= grid.size):
                raise UsageError("successor index out of range")
            adj[u] = _csr(rows, cols, grid.size)
        return cls(grid, controls, default, adj)

    def successors(self, index: int, u: str) -> PointSet:
        indptr, idx = self._adj[u]
        return PointSet.from_indices(self.grid, idx[indptr[index]:indptr[index + 1]])

    def edge_count(self, controls: Sequence[str] | None = None) -> int:
        return int(self.union_graph(controls)[1].size)

    def check_controls(self, controls) -> tuple[str, ...]:
        if controls is None:
            return self.controls
        controls = tuple(controls)
        if not controls:
            raise UsageError("control subset must be nonempty")
        unknown = [u for u in controls if u not in self.controls]
        if unknown:
            raise UsageError(f"controls {unknown} not in successor map")
        return controls

    def union_graph(self, controls: Sequence[str] | None = None):
        """Forward and reverse CSR of the union of successor edges over ``controls``."""
        key = tuple(sorted(self.check_controls(controls)))
        if key not in self._union:
            n = self.grid.size
            if len(key) == 1:
                indptr, dst = self._adj[key[0]]
            else:
                codes = []
                for u in key:
                    ip, d = self._adj[u]
                    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(ip))
                    codes.append(src * n + d)
                codes = np.unique(np.concatenate(codes))
                indptr, dst = _csr(codes // n, codes % n, n)
            src = np.repeat(np.arange(n, dtype=np.int32), np.diff(indptr))
            order = np.argsort(dst, kind="stable")
            rev_indptr, rev_src = _csr(dst[order], src[order], n)
            self._union[key] = (indptr, dst, rev_indptr, rev_src)
        return self._union[key]


@dataclass
class IterationStats:
    """Cardinality of the iterate after each step; ``cardinalities[0]`` is the start set."""

    cardinalities: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.cardinalities) - 1


def _as_map(dynamics, grid: Grid, cfg, controls, workers) -> SuccessorMap:
    if isinstance(dynamics, SuccessorMap):
        if dynamics.grid != grid:
            raise UsageError("successor map and point set use different grids")
        return dynamics
    if cfg is None:
        cfg = SuccessorConfig.for_grid(grid)
    return SuccessorMap.build(grid, dynamics, cfg, controls, workers)


def successors(grid: Grid, index: int, u: str, sys: ControlledSystem,
               cfg: SuccessorConfig) -> PointSet:
    """Successor set of one lattice point, computed directly (no map)."""
    x = grid.point_of(index)
    end = x + sys(x, u) * cfg.dt
    return grid.ball_query(end, cfg.expansion)


def viability_kernel(constraint: PointSet, dynamics: ControlledSystem | SuccessorMap,
                     cfg: SuccessorConfig | None = None, controls=None, *,
                     workers: int = 1, return_stats: bool = False):
    """Greatest subset ``K`` of ``constraint`` where every point has a successor in ``K``.

    Runs ``K_{i+1} = {x in K_i : some S(x, u) meets K_i}`` from ``K_0 = constraint``
    until nothing changes.
    """
    succ = _as_map(dynamics, constraint.grid, cfg, controls, workers)
    indptr, dst, rev_indptr, rev_src = succ.union_graph(controls)
    n = constraint.grid.size
    alive = constraint.mask.copy()
    src = np.repeat(np.arange(n), np.diff(indptr))
    count = np.bincount(src[alive[dst]], minlength=n)
    del src
    stats = IterationStats([int(alive.sum())])
    doomed = np.flatnonzero(alive & (count == 0))
    while doomed.size:
        alive[doomed] = False
        stats.cardinalities.append(stats.cardinalities[-1] - doomed.size)
        preds = _gather(rev_indptr, rev_src, doomed)
        count -= np.bincount(preds, minlength=n)
        cand = np.unique(preds)
        doomed = cand[alive[cand] & (count[cand] == 0)]
    result = PointSet(constraint.grid, alive)
    return (result, stats) if return_stats else result


def capture_basin(target: PointSet, constraint: PointSet | None,
                  dynamics: ControlledSystem | SuccessorMap,
                  cfg: SuccessorConfig | None = None, controls=None, *,
                  workers: int = 1, return_stats: bool = False):
    """Least fixed point of ``K_{i+1} = K_i + {x in constraint : some S(x, u) meets K_i}``.

    Starts from ``K_0 = target``; ``constraint=None`` means the whole grid.
    """
    grid = target.grid
    if constraint is not None and constraint.grid != grid:
        raise UsageError("target and constraint live on different grids")
    succ = _as_map(dynamics, grid, cfg, controls, workers)
    _, _, rev_indptr, rev_src = succ.union_graph(controls)
    allowed = np.ones(grid.size, dtype=bool) if constraint is None else constraint.mask
    inside = target.mask.copy()
    stats = IterationStats([int(inside.sum())])
    frontier = np.flatnonzero(inside)
    while frontier.size:
        preds = _gather(rev_indptr, rev_src, frontier)
        preds = preds[allowed[preds] & ~inside[preds]]
        frontier = np.unique(preds)
        if frontier.size:
            inside[frontier] = True
            stats.cardinalities.append(stats.cardinalities[-1] + frontier.size)
    result = PointSet(grid, inside)
    return (result, stats) if return_stats else result

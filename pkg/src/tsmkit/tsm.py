"""Topology-of-sustainable-management partition built from kernels and basins."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import CompactMap, compactify
from .grid import Grid, LabelArray, PointSet
from .system import ControlledSystem, DomainError
from .viability import (IterationStats, SuccessorConfig, SuccessorMap, capture_basin,
                        viability_kernel)


class Region(enum.IntEnum):
    Shelter = 0
    Glade = 1
    LakeUnlimited = 2
    LakeLimited = 3
    SunnyUpstream = 4
    DarkUpstream = 5
    Backwater = 6
    SunnyDownstream = 7
    DarkDownstream = 8
    SunnyEddy = 9
    DarkEddy = 10
    SunnyAbyss = 11
    DarkAbyss = 12
    Trench = 13


# regions lying in the undesirable part of state space
DARK_REGIONS = frozenset({Region.DarkUpstream, Region.DarkDownstream, Region.DarkEddy,
                          Region.DarkAbyss, Region.Trench})


@dataclass(eq=False)
class TsmResult:
    labels: LabelArray
    metadata: dict = field(default_factory=dict)
    compact_map: CompactMap | None = None
    timings: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> Grid:
        return self.labels.grid

    @property
    def counts(self) -> dict[str, int]:
        c = self.labels.counts(len(Region))
        return {r.name: int(c[r]) for r in Region}

    def region(self, r: Region) -> PointSet:
        return self.labels.members(int(r))

    def __eq__(self, other):
        return (isinstance(other, TsmResult) and self.labels == other.labels
                and self.metadata == other.metadata and self.compact_map == other.compact_map)


def _find(sys, attr):
    """First system in the ``inner`` wrapper chain carrying ``attr``."""
    while sys is not None and not isinstance(sys, SuccessorMap):
        if hasattr(sys, attr):
            return sys
        sys = getattr(sys, "inner", None)
    return None


def eddies_iteration(candidates_plus: PointSet, candidates_minus: PointSet,
                     dynamics: ControlledSystem | SuccessorMap,
                     cfg: SuccessorConfig | None = None, controls=None, *,
                     workers: int = 1, return_stats: bool = False):
    """Largest pair ``E+ <= candidates_plus``, ``E- <= candidates_minus`` with
    ``E+ <= Capt(E-)`` and ``E- <= Capt(E+)``.

    Alternates ``E-_i = Capt(E+_{i-1}) & E-_{i-1}`` and
    ``E+_i = Capt(E-_i) & E+_{i-1}`` until both stop shrinking.
    """
    if not candidates_plus.isdisjoint(candidates_minus):
        raise ValueError("eddy candidate sets must be disjoint")
    grid = candidates_plus.grid
    if not isinstance(dynamics, SuccessorMap):
        dynamics = SuccessorMap.build(grid, dynamics, cfg or SuccessorConfig.for_grid(grid),
                                      controls, workers)
    plus, minus = candidates_plus.copy(), candidates_minus.copy()
    plus_stats = IterationStats([len(plus)])
    minus_stats = IterationStats([len(minus)])
    while True:
        new_minus = capture_basin(plus, None, dynamics, controls=controls) & minus
        new_plus = capture_basin(new_minus, None, dynamics, controls=controls) & plus
        changed = new_minus != minus or new_plus != plus
        plus, minus = new_plus, new_minus
        if not changed:
            break
        plus_stats.cardinalities.append(len(plus))
        minus_stats.cardinalities.append(len(minus))
    if return_stats:
        return plus, minus, (plus_stats, minus_stats)
    return plus, minus


def tsm_partition(sys: ControlledSystem | SuccessorMap,
                  desirable: Callable[[np.ndarray], np.ndarray] | PointSet,
                  grid: Grid, cfg: SuccessorConfig | None = None, controls=None, *,
                  workers: int = 1, metadata: dict | None = None) -> TsmResult:
    """Label every lattice point with its TSM region.

    ``desirable`` is either a vectorized predicate on lattice coordinates or a
    ready-made point set. ``sys`` may be a prebuilt :class:`SuccessorMap`.
    """
    timings = {}
    t0 = time.perf_counter()
    if isinstance(sys, SuccessorMap):
        succ = sys
        cfg = succ.config
    else:
        cfg = cfg or SuccessorConfig.for_grid(grid)
        succ = SuccessorMap.build(grid, sys, cfg, controls, workers)
    controls = succ.check_controls(controls)
    timings["successors"] = time.perf_counter() - t0
    iters = {}

    def stage(name, fn, *args, **kw):
        t = time.perf_counter()
        out, st = fn(*args, return_stats=True, **kw)
        timings[name] = time.perf_counter() - t
        iters[name] = st.iterations
        return out

    plus = desirable if isinstance(desirable, PointSet) else PointSet.from_predicate(grid, desirable)
    minus = ~plus
    full = PointSet.full(grid)

    shelter = stage("shelter", viability_kernel, plus, succ, controls=(succ.default,))
    manageable = stage("manageable", viability_kernel, plus, succ, controls=controls)
    upstream = stage("upstream", capture_basin, shelter, None, succ, controls=controls)
    glade = stage("glade", capture_basin, shelter, plus, succ, controls=controls) - shelter
    lake = (upstream & manageable) - shelter - glade
    lake_unlimited = stage("lake", viability_kernel, lake, succ, controls=controls)
    lake_limited = lake - lake_unlimited
    rest_upstream = upstream - manageable
    backwater = manageable - upstream
    capt_m = stage("capt_manageable", capture_basin, manageable, None, succ, controls=controls)
    downstream = capt_m - upstream
    capt_w = stage("capt_backwater", capture_basin, backwater, None, succ, controls=controls)
    named_downstream = capt_w - upstream - backwater
    rest_downstream = downstream - backwater
    orphan = rest_downstream - named_downstream
    trench = full - stage("capt_desirable", capture_basin, plus, None, succ, controls=controls)

    t = time.perf_counter()
    eddy_plus, eddy_minus, (ep_stats, _) = eddies_iteration(
        plus - upstream - downstream, minus - upstream - downstream, succ,
        controls=controls, return_stats=True)
    timings["eddies"] = time.perf_counter() - t
    iters["eddies"] = ep_stats.iterations
    abyss = full - upstream - downstream - eddy_plus - eddy_minus - trench

    codes = np.full(grid.size, 255, dtype=np.uint8)
    assignments = [
        (Region.Shelter, shelter),
        (Region.Glade, glade),
        (Region.LakeUnlimited, lake_unlimited),
        (Region.LakeLimited, lake_limited),
        (Region.SunnyUpstream, rest_upstream & plus),
        (Region.DarkUpstream, rest_upstream & minus),
        (Region.Backwater, backwater),
        (Region.SunnyDownstream, rest_downstream & plus),
        (Region.DarkDownstream, rest_downstream & minus),
        (Region.SunnyEddy, eddy_plus),
        (Region.DarkEddy, eddy_minus),
        (Region.SunnyAbyss, abyss & plus),
        (Region.DarkAbyss, abyss & minus),
        (Region.Trench, trench),
    ]
    for region, members in assignments:
        if np.any(codes[members.mask] != 255):
            raise AssertionError(f"{region.name} overlaps an earlier region")
        codes[members.mask] = int(region)
    if np.any(codes == 255):
        raise AssertionError("partition left points unlabeled")

    meta = dict(metadata or {})
    meta.update({
        "resolution": list(grid.points_per_axis),
        "lower": list(grid.lower),
        "upper": list(grid.upper),
        "controls": list(controls),
        "default_control": succ.default,
        "iterations": iters,
        "unnamed_downstream": len(orphan),
    })
    if cfg is not None:
        meta.update({"dt": cfg.dt, "expansion": cfg.expansion, "expansion_mode": cfg.mode})
    homog = _find(sys, "epsilon")
    if homog is not None:
        meta.update({"epsilon": homog.epsilon, "norm": homog.norm})
    timings["total"] = time.perf_counter() - t0
    transformed = _find(sys, "compact_map")
    cmap = transformed.compact_map if transformed is not None else None
    sets = dict(desirable=plus, shelter=shelter, manageable=manageable, upstream=upstream,
                glade=glade, lake=lake, backwater=backwater, downstream=downstream,
                capt_backwater=capt_w, trench=trench, eddy_plus=eddy_plus,
                eddy_minus=eddy_minus, abyss=abyss)
    return TsmResult(LabelArray(grid, codes), meta, cmap, timings, sets)


def relative_volumes(r: TsmResult) -> dict[str, float]:
    """Fraction of lattice points carrying each region label."""
    counts = r.labels.counts(len(Region))
    return {reg.name: counts[reg] / r.grid.size for reg in Region}


def classify_point(x, r: TsmResult) -> Region:
    """Region of the lattice point nearest to ``x`` (given in original coordinates)."""
    x = np.asarray(x, dtype=float)
    y = compactify(x, r.compact_map) if r.compact_map is not None else x
    try:
        index = r.grid.index_of(y)
    except DomainError as exc:
        raise DomainError(f"state {x.tolist()} falls outside the partition grid") from exc
    return Region(int(r.labels[index]))

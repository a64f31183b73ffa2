import numpy as np
import pytest

from conftest import random_graph, random_subset
from tsmkit import ays
from tsmkit.geometry import decompactify, homogenize
from tsmkit.grid import Grid, PointSet
from tsmkit.oracle import SuccessorGraph, oracle_basin, oracle_eddies
from tsmkit.system import ControlledSystem, DomainError
from tsmkit.tsm import (DARK_REGIONS, Region, classify_point, eddies_iteration, relative_volumes,
                        tsm_partition)
from tsmkit.viability import SuccessorConfig, SuccessorMap, capture_basin


def two_node():
    g = Grid.cube(1, 2)
    return g, SuccessorMap.from_adjacency(g, {"default": [[1], [0]]})


def test_two_node_cycle_is_an_eddy():
    g, m = two_node()
    plus, minus = PointSet.from_indices(g, [0]), PointSet.from_indices(g, [1])
    ep, em = eddies_iteration(plus, minus, m)
    assert ep == plus and em == minus
    r = tsm_partition(m, plus, g)
    assert r.labels.codes.tolist() == [Region.SunnyEddy, Region.DarkEddy]


def test_eddies_trivial_cases():
    g, m = two_node()
    e = PointSet.empty(g)
    assert eddies_iteration(e, e, m) == (e, e)
    one_way = SuccessorMap.from_adjacency(g, {"default": [[1], [1]]})
    ep, em = eddies_iteration(PointSet.from_indices(g, [0]), PointSet.from_indices(g, [1]), one_way)
    assert not ep and not em
    with pytest.raises(ValueError):
        eddies_iteration(PointSet.full(g), PointSet.from_indices(g, [0]), m)


@pytest.mark.parametrize("seed", range(50))
def test_eddies_match_oracle(seed):
    g, m, rng = random_graph(seed, max_side=30)
    split = rng.random(g.nodes) < 0.5
    keep = rng.random(g.nodes) < 0.8
    plus = np.flatnonzero(split & keep)
    minus = np.flatnonzero(~split & keep)
    ep, em, (sp, sm) = eddies_iteration(PointSet.from_indices(g.grid, plus),
                                        PointSet.from_indices(g.grid, minus), m, return_stats=True)
    op, om = oracle_eddies(g, plus, minus)
    assert set(ep.indices().tolist()) == op and set(em.indices().tolist()) == om
    # post-conditions and monotone iterates
    assert ep <= capture_basin(em, None, m) and em <= capture_basin(ep, None, m)
    for st in (sp, sm):
        assert all(b <= a for a, b in zip(st.cardinalities, st.cardinalities[1:]))


def _eddie_like(g, p, m):
    return p <= oracle_basin(g, m) and m <= oracle_basin(g, p)


@pytest.mark.parametrize("seed", range(20))
def test_eddies_are_maximal(seed):
    """Union with any other eddie-like pair inside the candidates changes nothing."""
    g, mp, rng = random_graph(100 + seed, max_side=6)
    split = rng.random(g.nodes) < 0.5
    plus, minus = set(np.flatnonzero(split).tolist()), set(np.flatnonzero(~split).tolist())
    ep, em = oracle_eddies(g, plus, minus)
    for _ in range(300):
        p = {v for v in plus if rng.random() < 0.4}
        m = {v for v in minus if rng.random() < 0.4}
        if _eddie_like(g, p, m):
            assert p <= ep and m <= em
            # the union of two eddie-like pairs is eddie-like
            assert _eddie_like(g, p | ep, m | em)


def test_globally_stable_everything_shelter():
    g = Grid.cube(2, 15)
    sys = homogenize(ControlledSystem(2, ("default", "push"), "default",
                                      lambda x, u: (0.5 - x) if u == "default" else 0.1 + 0 * x),
                     1e-4)
    r = tsm_partition(sys, lambda x: np.ones(len(x), bool), g, SuccessorConfig.for_grid(g))
    assert r.counts["Shelter"] == g.size
    assert relative_volumes(r)["Shelter"] == 1.0


def test_partition_invariants(ays40):
    r = ays40
    g = r.grid
    assert sum(r.counts.values()) == g.size
    assert abs(sum(relative_volumes(r).values()) - 1.0) < 1e-12
    s = r.sets
    plus = s["desirable"]
    assert s["shelter"] <= s["manageable"] <= plus
    assert s["glade"] <= s["upstream"]
    assert s["lake"] <= s["upstream"] & s["manageable"]
    assert s["backwater"].isdisjoint(s["upstream"])
    assert s["trench"].isdisjoint(s["upstream"] | s["downstream"])
    cand_p = plus - s["upstream"] - s["downstream"]
    cand_m = ~plus - s["upstream"] - s["downstream"]
    assert s["eddy_plus"] <= cand_p and s["eddy_minus"] <= cand_m
    m = SuccessorMap.build(g, homogenize(ays.ays_transformed_system(), 1e-4),
                           SuccessorConfig.for_grid(g))
    assert s["trench"].isdisjoint(capture_basin(plus, None, m))
    assert s["eddy_plus"] <= capture_basin(s["eddy_minus"], None, m)
    assert s["eddy_minus"] <= capture_basin(s["eddy_plus"], None, m)
    for reg in Region:
        members = r.region(reg)
        if reg in DARK_REGIONS:
            assert members.isdisjoint(plus)
        else:
            assert members <= plus
    assert 0 < relative_volumes(r)["Shelter"] < 1
    assert r.counts["Backwater"] > 0


def test_capture_basin_distributes_over_union(ays40):
    g = ays40.grid
    m = SuccessorMap.build(g, homogenize(ays.ays_transformed_system(), 1e-4),
                           SuccessorConfig.for_grid(g))
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = PointSet.from_indices(g, rng.integers(0, g.size, 20))
        b = PointSet.from_indices(g, rng.integers(0, g.size, 20))
        assert capture_basin(a | b, None, m) == capture_basin(a, None, m) | capture_basin(b, None, m)


def test_classify_point(ays40):
    p = ays.AYSParams()
    xb = np.array(ays.fixed_points(p)[0].state)
    assert classify_point(xb, ays40) in DARK_REGIONS
    shelter_pt = ays40.region(Region.Shelter).points()
    inner = shelter_pt[np.all(shelter_pt < 1, axis=1)][0]
    assert classify_point(decompactify(inner, p.compact_map), ays40) == Region.Shelter
    with pytest.raises(DomainError):
        classify_point(np.array([-1.0, 1.0, 1.0]), ays40)


def test_metadata(ays40):
    md = ays40.metadata
    assert md["resolution"] == [40, 40, 40]
    assert md["epsilon"] == 1e-4 and md["norm"] == "euclidean"
    assert md["controls"] == list(ays.CONTROLS) and md["default_control"] == "default"
    assert md["expansion_mode"] == "guaranteed"
    assert set(md["iterations"]) >= {"shelter", "manageable", "upstream", "eddies"}
    assert ays40.compact_map == ays.AYSParams().compact_map

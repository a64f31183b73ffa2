"""Brute-force reference algorithms on explicitly stored successor graphs.

Slow on purpose: plain Python sets and lists, no shared code with the
fast kernel/basin routines. Used by the test suite only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import Grid


@dataclass
class SuccessorGraph:
    """``adjacency[u][node]`` lists the successors of ``node`` under control ``u``."""

    grid: Grid
    adjacency: dict

    def __post_init__(self):
        n = self.grid.size
        for u, lists in self.adjacency.items():
            if len(lists) != n:
                raise ValueError(f"control {u!r}: expected {n} successor lists")
            for succ in lists:
                if any(not 0 <= int(v) < n for v in succ):
                    raise ValueError("successor index out of range")

    @property
    def nodes(self) -> int:
        return self.grid.size

    @classmethod
    def random(cls, grid: Grid, controls, rng: np.random.Generator, max_out: int = 3,
               p_empty: float = 0.1) -> "SuccessorGraph":
        n = grid.size
        adj = {}
        for u in controls:
            lists = []
            for _ in range(n):
                if rng.random() < p_empty:
                    lists.append([])
                else:
                    k = int(rng.integers(1, max_out + 1))
                    lists.append(sorted({int(v) for v in rng.integers(0, n, k)}))
            adj[u] = lists
        return cls(grid, adj)

    def out(self, node: int, controls=None):
        """Successors of ``node`` for each control, as a list of sets."""
        return [set(self.adjacency[u][node]) for u in (controls or self.adjacency)]

    def predecessors(self, controls=None) -> list[set]:
        pred = [set() for _ in range(self.nodes)]
        for u in (controls or self.adjacency):
            for x, succ in enumerate(self.adjacency[u]):
                for y in succ:
                    pred[int(y)].add(x)
        return pred


def oracle_kernel(graph: SuccessorGraph, constraint, controls=None) -> set:
    """Repeatedly drop nodes with no control keeping a successor in the set."""
    keep = set(int(v) for v in constraint)
    changed = True
    while changed:
        changed = False
        for x in sorted(keep):
            if not any(s & keep for s in graph.out(x, controls)):
                keep.discard(x)
                changed = True
    return keep


def oracle_basin(graph: SuccessorGraph, target, constraint=None, controls=None) -> set:
    """Nodes with a path into ``target`` that stays in ``constraint`` before arriving."""
    allowed = set(range(graph.nodes)) if constraint is None else set(int(v) for v in constraint)
    pred = graph.predecessors(controls)
    reached = set(int(v) for v in target)
    queue = deque(reached)
    while queue:
        y = queue.popleft()
        for x in pred[y]:
            if x not in reached and x in allowed:
                reached.add(x)
                queue.append(x)
    return reached


def oracle_eddies(graph: SuccessorGraph, plus, minus, controls=None) -> tuple[set, set]:
    """Shrink both sides to the nodes that can reach the other side, until nothing changes."""
    p = set(int(v) for v in plus)
    m = set(int(v) for v in minus)
    while True:
        m2 = m & oracle_basin(graph, p, None, controls)
        p2 = p & oracle_basin(graph, m2, None, controls)
        if p2 == p and m2 == m:
            return p, m
        p, m = p2, m2

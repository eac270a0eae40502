"""Plain undirected graphs and the small fixture families used in tests and scripts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``; ``edges`` is an (E, 2) int array with u < v."""

    n: int
    edges: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loop")
            e = np.sort(e, axis=1)
            if len(np.unique(e, axis=0)) != len(e):
                raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", e)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        a[self.edges[:, 0], self.edges[:, 1]] = 1
        a[self.edges[:, 1], self.edges[:, 0]] = 1
        return a


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)], f"P{n}")


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)], f"C{n}")


def complete(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)], f"K{n}")


def star(n: int) -> Graph:
    return Graph(n, [(0, i) for i in range(1, n)], f"S{n}")


def disjoint_edges(k: int) -> Graph:
    return Graph(2 * k, [(2 * i, 2 * i + 1) for i in range(k)], f"{k}K2")


def triangle() -> Graph:
    return complete(3)


def as_graph(g) -> Graph:
    """Coerce anything with ``n`` and ``edges`` (e.g. a GadgetGraph) to a Graph."""
    if isinstance(g, Graph):
        return g
    return Graph(int(g.n), np.asarray(g.edges), getattr(g, "name", ""))

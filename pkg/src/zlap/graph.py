"""Weighted graph container, degree bookkeeping and edge insertion.

Graphs are stored as dense ``n x n`` weight matrices. Entry ``(u, v)`` is the
weight of the edge ``u -> v``; diagonal entries are self-loops and count once
towards both the in- and out-degree of their vertex.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from zlap.errors import InputError

__all__ = [
    "Graph",
    "DegreeVector",
    "new_graph",
    "degrees",
    "total_traffic",
    "add_edge",
    "is_connected",
]


def _mirror_upper(m: np.ndarray) -> np.ndarray:
    """Return the symmetric matrix built from the upper triangle of ``m``."""
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted adjacency matrix.

    Attributes:
        n: number of vertices.
        weights: read-only ``(n, n)`` float array of nonnegative weights.
        directed: if False, ``weights`` is exactly symmetric.
    """

    n: int
    weights: np.ndarray
    directed: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"weights must be a square matrix, got shape {w.shape}")
        if self.n < 1 or w.shape[0] != self.n:
            raise InputError(f"vertex count {self.n} does not match weights of shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise InputError("weights must be finite")
        if np.any(w < 0):
            u, v = np.argwhere(w < 0)[0]
            raise InputError(f"negative weight {w[u, v]} on edge ({u}, {v})")
        if not self.directed and not np.array_equal(w, w.T):
            raise InputError("undirected graph requires an exactly symmetric weight matrix")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_matrix(cls, weights, directed: bool = False, symmetrize: bool = False) -> "Graph":
        """Build a graph from a dense matrix.

        With ``symmetrize=True`` an undirected graph is built from the upper
        triangle of ``weights`` (mirrored), which absorbs round-off asymmetry
        left by products such as ``B A B``.
        """
        w = np.asarray(weights, dtype=float)
        if symmetrize and not directed:
            w = _mirror_upper(w)
        return cls(n=w.shape[0], weights=w, directed=directed)

    @property
    def out_degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def in_degrees(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def edges(self) -> list[tuple[int, int, float]]:
        """Nonzero edges as ``(u, v, w)``; undirected graphs list ``u <= v`` only."""
        w = self.weights
        mask = w > 0 if self.directed else np.triu(w > 0)
        return [(int(u), int(v), float(w[u, v])) for u, v in np.argwhere(mask)]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.directed == other.directed
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, {kind}, edges={len(self.edges())})"


@dataclass(frozen=True, eq=False)
class DegreeVector:
    values: np.ndarray
    kind: str

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _check_index(n: int, *indices: int) -> None:
    for i in indices:
        if not (0 <= i < n):
            raise InputError(f"vertex index {i} out of range for n={n}")


def _check_weight(w: float) -> float:
    w = float(w)
    if not np.isfinite(w):
        raise InputError(f"non-finite weight {w}")
    if w < 0:
        raise InputError(f"negative weight {w}")
    return w


def new_graph(
    n: int,
    edges: Iterable[Sequence[float]],
    directed: bool = False,
) -> Graph:
    """Build a graph from an edge list.

    Duplicate ``(u, v)`` entries sum their weights. For undirected graphs each
    edge is stored in both directions; a self-loop is stored once.
    """
    if n < 1:
        raise InputError(f"vertex count must be positive, got {n}")
    w = np.zeros((n, n))
    for edge in edges:
        u, v, weight = int(edge[0]), int(edge[1]), _check_weight(edge[2])
        _check_index(n, u, v)
        w[u, v] += weight
        if not directed and u != v:
            w[v, u] += weight
    return Graph(n=n, weights=w, directed=directed)


def degrees(g: Graph, kind: str = "out") -> DegreeVector:
    """Row sums (``kind="out"``) or column sums (``kind="in"``) of the weights."""
    if kind == "out":
        return DegreeVector(g.out_degrees, "out")
    if kind == "in":
        return DegreeVector(g.in_degrees, "in")
    raise InputError(f"degree kind must be 'out' or 'in', got {kind!r}")


def total_traffic(g: Graph) -> float:
    """Total weighted out-degree; ``2|E|`` for a unit-weight loopless undirected graph."""
    return float(g.out_degrees.sum())


def add_edge(g: Graph, u: int, v: int, w: float) -> Graph:
    """Return a copy of ``g`` with ``w`` added to edge ``(u, v)`` (both ways if undirected)."""
    _check_index(g.n, u, v)
    w = _check_weight(w)
    m = np.array(g.weights)
    m[u, v] += w
    if not g.directed and u != v:
        m[v, u] += w
    return Graph(n=g.n, weights=m, directed=g.directed)


def is_connected(g: Graph) -> bool:
    """BFS over the undirected support of ``g``."""
    support = (g.weights + g.weights.T) > 0
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(support[u] & ~seen):
            seen[v] = True
            queue.append(v)
    return bool(seen.all())

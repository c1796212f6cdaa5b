"""Conductance, bottleneck search, protocol models and edge-insertion healing.

The cut between ``S`` and its complement sums both directions of every
crossing edge, ``sum_{i in S, j not in S} (w_ij + w_ji)``, so conductance
values here are twice the single-counted textbook convention. Volumes are
weighted degrees including self-loops; cuts never include self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from zlap.errors import InputError
from zlap.graph import Graph, add_edge, is_connected, total_traffic
from zlap.operators import (
    ZLaplacian,
    as_delay,
    delay_transform,
    similarity_transform,
    z_laplacian,
)
from zlap.spectral import sym_eig

__all__ = [
    "CutResult",
    "ProtocolModel",
    "PROTOCOLS",
    "conductance",
    "min_conductance",
    "protocol_model",
    "HealResult",
    "heal_rank",
]

PROTOCOLS = ("base", "random_access", "tdma_saturated", "tdma_matched")
BRUTE_MAX_N = 24
# Relative slack when comparing conductances for ties.
TIE_RTOL = 1e-12
_CHUNK = 1 << 15


@dataclass(frozen=True)
class CutResult:
    subset: tuple
    cut: float
    vol_s: float
    vol_complement: float
    phi: float


def _subset_tuple(g: Graph, subset) -> tuple:
    s = tuple(sorted({int(i) for i in subset}))
    if not s:
        raise InputError("subset must be nonempty")
    if len(s) >= g.n:
        raise InputError("subset must be a proper subset of the vertices")
    if s[0] < 0 or s[-1] >= g.n:
        raise InputError(f"subset index out of range for n={g.n}")
    return s


def conductance(w: Graph, subset) -> CutResult:
    """Conductance ``cut(S, S') / min(vol S, vol S')`` of one vertex subset."""
    s = _subset_tuple(w, subset)
    inside = np.zeros(w.n, dtype=bool)
    inside[list(s)] = True
    m = w.weights
    cut = float(m[np.ix_(inside, ~inside)].sum() + m[np.ix_(~inside, inside)].sum())
    d = w.out_degrees
    vol_s = float(d[inside].sum())
    vol_c = float(d[~inside].sum())
    denom = min(vol_s, vol_c)
    phi = cut / denom if denom > 0 else np.inf
    return CutResult(s, cut, vol_s, vol_c, phi)


def _canonical_side(s: tuple, n: int) -> tuple:
    """Represent a bipartition by its smaller side, lexicographically first on size ties."""
    comp = tuple(i for i in range(n) if i not in set(s))
    if len(comp) < len(s) or (len(comp) == len(s) and comp < s):
        return comp
    return s


def _best(candidates: list) -> tuple:
    """Pick the minimal-phi subset; ties by smaller size then lexicographic order."""
    phis = np.array([phi for phi, _ in candidates])
    best = phis.min()
    slack = TIE_RTOL * max(abs(best), 1.0)
    tied = [s for phi, s in candidates if phi <= best + slack]
    return min(tied, key=lambda s: (len(s), s))


def _brute_force(w: Graph) -> tuple:
    n = w.n
    if n > BRUTE_MAX_N:
        raise InputError(f"brute force limited to n <= {BRUTE_MAX_N}, got n={n}")
    sym = w.weights + w.weights.T
    np.fill_diagonal(sym, 0.0)
    d = w.out_degrees
    total = d.sum()
    bits = np.arange(n - 1, dtype=np.int64)
    # vertex n-1 stays outside S; S ranges over nonempty subsets of the rest
    n_masks = (1 << (n - 1)) - 1
    best_phi = np.inf
    best_masks: list = []
    for start in range(1, n_masks + 1, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, n_masks + 1), dtype=np.int64)
        x = np.zeros((masks.size, n))
        x[:, : n - 1] = (masks[:, None] >> bits[None, :]) & 1
        vol = x @ d
        cut = np.einsum("ij,ij->i", x @ sym, 1.0 - x)
        denom = np.minimum(vol, total - vol)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(denom > 0, cut / denom, np.inf)
        lo = phi.min()
        slack = TIE_RTOL * max(abs(min(lo, best_phi)), 1.0)
        if lo < best_phi - slack:
            best_phi = lo
            best_masks = []
        if lo <= best_phi + slack:
            best_phi = min(best_phi, lo)
            best_masks.extend((float(p), int(m)) for p, m in zip(phi[phi <= best_phi + slack], masks[phi <= best_phi + slack]))
    cands = []
    for phi, mask in best_masks:
        s = tuple(i for i in range(n - 1) if (mask >> i) & 1)
        cands.append((phi, _canonical_side(s, n)))
    return _best(cands)


def _sweep(w: Graph) -> tuple:
    lap = similarity_transform(w, 1.0, 0.5)
    fiedler = sym_eig(lap.matrix).eigenvectors[:, 1]
    order = np.lexsort((np.arange(w.n), fiedler))
    cands = []
    for k in range(1, w.n):
        s = _canonical_side(tuple(sorted(int(i) for i in order[:k])), w.n)
        cands.append((conductance(w, s).phi, s))
    return _best(cands)


def min_conductance(w: Graph, method: str = "brute") -> CutResult:
    """Minimum-conductance bipartition.

    ``brute`` enumerates all ``2^(n-1) - 1`` bipartitions (n <= 24) and is
    exact. ``sweep`` orders vertices by the Fiedler vector of the
    symmetric-basis Laplacian and scans the ``n - 1`` prefix cuts.
    """
    if w.n < 2:
        raise InputError("need at least two vertices to cut")
    if not is_connected(w):
        raise InputError("bottleneck search requires a connected graph")
    if method == "brute":
        s = _brute_force(w)
    elif method == "sweep":
        if w.directed:
            raise InputError("sweep cut requires an undirected graph")
        s = _sweep(w)
    else:
        raise InputError(f"unknown method {method!r}; expected 'brute' or 'sweep'")
    return conductance(w, s)


@dataclass(frozen=True, eq=False)
class ProtocolModel:
    """A communications protocol expressed as a transformed graph.

    ``base`` is the graph the delays act on (``A``, or ``W' = D^-1 A D^-1``
    for the TDMA models); ``graph`` is ``W = D_base (T - I) + base`` with the
    delays absorbed as self-loops, and ``laplacian`` is
    ``T^-1 (I - D_base^-1 base)``, which equals the plain random-walk
    Laplacian of ``graph``.
    """

    name: str
    graph: Graph
    base: Graph
    delay: np.ndarray
    laplacian: ZLaplacian
    traffic: float


def _tdma_share(g: Graph) -> Graph:
    d = g.out_degrees
    return Graph.from_matrix(g.weights / d[:, None] / d[None, :], symmetrize=True)


def protocol_model(g: Graph, name: str, delay=None) -> ProtocolModel:
    """Build one of the protocol models on an undirected traffic graph.

    * ``base``: no delays, ``W = A``.
    * ``random_access``: delays equal to degree, ``T = D``.
    * ``tdma_saturated``: time-divided bandwidth ``W'``, with the delays
      chosen so every vertex keeps its original traffic,
      ``tau_i = d_i(A) / d_i(W')``.
    * ``tdma_matched``: ``W = W'`` with no delays.

    ``delay`` overrides the protocol's own delay rule (used to keep the
    pre-insertion delays when healing).
    """
    if name not in PROTOCOLS:
        raise InputError(f"unknown protocol {name!r}; expected one of {PROTOCOLS}")
    if g.directed:
        raise InputError("protocol models require an undirected graph")
    d = g.out_degrees
    if np.any(d <= 0):
        raise InputError(f"vertex {int(np.flatnonzero(d <= 0)[0])} has zero degree")
    base = _tdma_share(g) if name.startswith("tdma") else g
    if delay is not None:
        t = as_delay(delay, g.n)
    elif name == "random_access":
        t = d.copy()
    elif name == "tdma_saturated":
        t = as_delay(d / base.out_degrees, g.n)
    else:
        t = np.ones(g.n)
    w = delay_transform(base, t)
    lap = z_laplacian(base, 1.0, t)
    return ProtocolModel(name, w, base, t, lap, total_traffic(w))


@dataclass(frozen=True)
class HealResult:
    edge: tuple
    phi: float
    cut: CutResult


def heal_rank(
    g: Graph,
    protocol: str,
    candidates: Sequence[Sequence[int]],
    bandwidth: float,
    delay_update: bool = False,
    method: str = "brute",
) -> list:
    """Rank candidate edges by the minimum conductance after inserting each one.

    Each candidate ``(u, v)`` is added to ``g`` with weight ``bandwidth`` and
    the protocol model is rebuilt. With ``delay_update`` the protocol's delay
    rule is re-applied to the augmented graph; otherwise the delays of the
    original model are kept. Results are sorted by descending conductance,
    then by edge.
    """
    if bandwidth < 0:
        raise InputError(f"bandwidth must be >= 0, got {bandwidth}")
    before = protocol_model(g, protocol)
    results = []
    for cand in candidates:
        u, v = int(cand[0]), int(cand[1])
        healed = add_edge(g, u, v, bandwidth)
        keep: Optional[np.ndarray] = None if delay_update else before.delay
        model = protocol_model(healed, protocol, delay=keep)
        best = min_conductance(model.graph, method)
        results.append(HealResult((u, v), best.phi, best))
    results.sort(key=lambda r: (-r.phi, r.edge))
    return results

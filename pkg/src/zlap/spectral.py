"""Symmetric eigendecomposition, candidate Laplacians and band filtering.

``sym_eig`` is a cyclic Jacobi solver. Each sweep visits every pair
``(p, q)`` once, grouped by a round-robin schedule into rounds of disjoint
pairs; rotations within a round commute, so a whole round is applied as one
vectorized update. The rotation order is fixed, which keeps results
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
import numpy as np

from zlap.errors import ConvergenceError, InputError
from zlap.graph import Graph
from zlap.operators import as_vector

__all__ = [
    "SpectralDecomposition",
    "BandMask",
    "sym_eig",
    "candidate_laplacian",
    "band_normalizers",
    "band_reconstruct",
    "low_pass_mask",
    "high_pass_mask",
    "band_mask",
    "top_percent_edges",
]

SYMMETRY_TOL = 1e-10
OFFDIAG_RTOL = 1e-12
MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues; column ``k`` of ``eigenvectors`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues[None, :]) @ v.T


@dataclass(frozen=True)
class BandMask:
    """Eigen-indices (by ascending eigenvalue rank) kept by a band filter."""

    keep: frozenset
    n: int

    def __post_init__(self):
        keep = frozenset(int(i) for i in self.keep)
        bad = [i for i in keep if not 0 <= i < self.n]
        if bad:
            raise InputError(f"mask indices {sorted(bad)} out of range for n={self.n}")
        object.__setattr__(self, "keep", keep)

    def complement(self) -> "BandMask":
        return BandMask(frozenset(range(self.n)) - self.keep, self.n)

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[list(self.keep)] = 1.0
        return out


@lru_cache(maxsize=64)
def _round_robin(n: int):
    """Rounds of disjoint index pairs covering every pair of ``range(n)`` once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        pairs.sort()
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> float:
    off = a.copy()
    off[np.diag_indices_from(off)] = 0.0
    return float(np.linalg.norm(off))


def sym_eig(m) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass falls below
    ``1e-12 * ||M||_F``. Eigenvectors are signed so that their
    largest-magnitude entry is positive (first such entry on ties).
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"matrix must be square, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) >= SYMMETRY_TOL:
        raise InputError("matrix is not symmetric")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    target = OFFDIAG_RTOL * np.linalg.norm(a)
    rounds = _round_robin(n)
    for _ in range(MAX_SWEEPS):
        if _off_norm(a) <= target:
            break
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            active = apq != 0
            safe_apq = np.where(active, apq, 1.0)
            # a subnormal a_pq overflows tau to inf, and t correctly becomes 0
            with np.errstate(over="ignore"):
                tau = (aqq - app) / (2.0 * safe_apq)
                sign = np.where(tau >= 0, 1.0, -1.0)
                t = sign / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rp, rq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * rp - s[:, None] * rq, s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p], a[:, q]
            a[:, p], a[:, q] = cp * c - cq * s, cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = vp * c - vq * s, vp * s + vq * c
    else:
        if _off_norm(a) > target:
            raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    v = v[:, order]
    if n:
        lead = np.argmax(np.abs(v), axis=0)
        flip = v[lead, np.arange(n)] < 0
        v[:, flip] *= -1.0
    return SpectralDecomposition(vals, v)


def _undirected_degrees(g: Graph) -> np.ndarray:
    if g.directed:
        raise InputError("candidate Laplacians require an undirected graph")
    d = g.out_degrees
    if np.any(d <= 0):
        raise InputError(f"vertex {int(np.flatnonzero(d <= 0)[0])} has zero degree")
    return d


def _symmetric(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def candidate_laplacian(g: Graph, which: str = "L0", replicate=1.0) -> np.ndarray:
    """Symmetric shift operators for band analysis.

    * ``L0``: normalized Laplacian ``D^-1/2 (D - A) D^-1/2``.
    * ``L1``: the same construction on ``W' = D^-1 A D^-1`` (walk biased
      towards low-degree vertices).
    * ``L2``: ``Z^1/2 D^-1/2 (Z^-1 D - A) D^-1/2 Z^1/2`` (replicating walk).
    """
    d = _undirected_degrees(g)
    a = g.weights
    if which == "L0":
        s = 1.0 / np.sqrt(d)
        core = -a
        core[np.diag_indices(g.n)] += d
    elif which == "L1":
        w = a / d[:, None] / d[None, :]
        w = _symmetric(w)
        dw = w.sum(axis=1)
        s = 1.0 / np.sqrt(dw)
        core = -w
        core[np.diag_indices(g.n)] += dw
    elif which == "L2":
        z = as_vector(replicate, g.n, "replicate Z")
        s = np.sqrt(z) / np.sqrt(d)
        core = -a
        core[np.diag_indices(g.n)] += d / z
    else:
        raise InputError(f"unknown candidate Laplacian {which!r}; expected L0, L1 or L2")
    return _symmetric(s[:, None] * core * s[None, :])


def band_normalizers(g: Graph, which: str = "L2", replicate=1.0):
    """Degree and replicate vectors used to undo the normalization of ``which``.

    ``L0`` uses ``(D, 1)``, ``L1`` uses ``(D_W', 1)`` so that the full band
    returns ``W'``, and ``L2`` uses ``(D, Z)``.
    """
    d = _undirected_degrees(g)
    if which == "L0":
        return d, np.ones(g.n)
    if which == "L1":
        w = _symmetric(g.weights / d[:, None] / d[None, :])
        return w.sum(axis=1), np.ones(g.n)
    if which == "L2":
        return d, as_vector(replicate, g.n, "replicate Z")
    raise InputError(f"unknown candidate Laplacian {which!r}; expected L0, L1 or L2")


def band_reconstruct(
    g: Graph,
    decomp: SpectralDecomposition,
    mask: BandMask,
    replicate=1.0,
    which: str = "L2",
) -> np.ndarray:
    """Adjacency implied by keeping only the masked eigenvalues.

    ``A' = Z^-1/2 D^1/2 (I - V diag(lam * mask) V^T) Z^-1/2 D^1/2`` with the
    normalizers of ``which``. Keeping every eigenvalue reproduces the graph the
    Laplacian was built from; keeping none gives the diagonal ``Z^-1 D``.
    """
    if decomp.n != g.n or mask.n != g.n:
        raise InputError(f"dimension mismatch: graph n={g.n}, decomposition n={decomp.n}, mask n={mask.n}")
    d, z = band_normalizers(g, which, replicate)
    outer = np.sqrt(d) / np.sqrt(z)
    v = decomp.eigenvectors
    middle = -((v * (decomp.eigenvalues * mask.indicator())[None, :]) @ v.T)
    middle[np.diag_indices(g.n)] += 1.0
    return _symmetric(outer[:, None] * middle * outer[None, :])


def _check_k(decomp: SpectralDecomposition, k: int) -> None:
    if not 0 <= k <= decomp.n:
        raise InputError(f"band size k={k} out of range [0, {decomp.n}]")


def low_pass_mask(decomp: SpectralDecomposition, k: int) -> BandMask:
    """Keep the ``k`` smallest eigenvalues."""
    _check_k(decomp, k)
    return BandMask(frozenset(range(k)), decomp.n)


def high_pass_mask(decomp: SpectralDecomposition, k: int) -> BandMask:
    """Keep all but the ``k`` smallest eigenvalues."""
    _check_k(decomp, k)
    return BandMask(frozenset(range(k, decomp.n)), decomp.n)


def top_percent_edges(a, percent: float) -> list[tuple[int, int, float]]:
    """Heaviest ``floor(percent/100 * n(n-1)/2)`` vertex pairs of a symmetric matrix.

    Every unordered off-diagonal pair is ranked, zero-weight pairs included.
    Ties go to the lexicographically smaller ``(u, v)``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("matrix must be square")
    if a.size and np.max(np.abs(a - a.T)) >= SYMMETRY_TOL:
        raise InputError("matrix is not symmetric")
    if not 0 < percent <= 100:
        raise InputError(f"percent must lie in (0, 100], got {percent}")
    n = a.shape[0]
    pairs = n * (n - 1) // 2
    count = math.floor(round(percent * pairs / 100.0, 9))
    u, v = np.triu_indices(n, 1)
    w = a[u, v]
    order = np.lexsort((v, u, -w))[:count]
    return [(int(u[i]), int(v[i]), float(w[i])) for i in order]


def band_mask(decomp: SpectralDecomposition, band: str, k: int) -> BandMask:
    """``low_pass_mask`` or ``high_pass_mask`` selected by name."""
    if band == "low":
        return low_pass_mask(decomp, k)
    if band == "high":
        return high_pass_mask(decomp, k)
    raise InputError(f"band must be 'low' or 'high', got {band!r}")

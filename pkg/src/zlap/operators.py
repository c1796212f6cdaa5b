"""Shift operators and Z-Laplacians built from graphs and diagonal parameters.

Signals are row vectors, so every operator here acts by right multiplication:
``theta_next = theta @ H``. Diagonal parameter matrices are passed as vectors
(or scalars, which broadcast):

* bias ``B`` reweights transitions towards target vertices,
* delay ``T`` sets per-vertex inverse clock rates,
* replicate ``Z`` scales the flow arriving at each vertex.

The decomposition functions invert the constructions: any nonnegative matrix
is a replicating random-walk filter, and any Z-matrix is a Z-Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from zlap.errors import ConvergenceError, InputError
from zlap.graph import Graph, is_connected

__all__ = [
    "RECIPES",
    "DiagonalParams",
    "ShiftOperator",
    "ZLaplacian",
    "random_walk_operator",
    "consensus_operator",
    "bias_transform",
    "delay_transform",
    "parameterized_laplacian",
    "perron_eigenpair",
    "replicator_operator",
    "replicator_random_walk_form",
    "similarity_transform",
    "sis_filter",
    "nonnegative_filter",
    "dual_consensus_filter",
    "adjacency_family_member",
    "basis_unify",
    "decompose_nonnegative",
    "z_laplacian",
    "decompose_z_matrix",
    "random_walk_laplacian",
]

RECIPES = ("random-walk", "consensus", "replicator", "SIS", "nonnegative", "dual", "custom")

STOCHASTIC_TOL = 1e-10
# Row/column sums of freshly normalized operators are exact to a few ulps.
OPERATOR_SUM_TOL = 1e-12


def as_vector(x, n: int, name: str) -> np.ndarray:
    """Broadcast a scalar or check a length-``n`` vector; entries must be finite and > 0."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = np.full(n, float(v))
    elif v.shape != (n,):
        raise InputError(f"{name} must be a scalar or have length {n}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} entries must be finite")
    if np.any(v <= 0):
        i = int(np.flatnonzero(v <= 0)[0])
        raise InputError(f"{name} entries must be positive; entry {i} is {v[i]}")
    return v


def as_delay(x, n: int, allow_fractional: bool = False) -> np.ndarray:
    """Delay vector; entries must be >= 1 unless ``allow_fractional``."""
    t = as_vector(x, n, "delay T")
    if not allow_fractional and np.any(t < 1):
        i = int(np.flatnonzero(t < 1)[0])
        raise InputError(f"delay entries must be >= 1; entry {i} is {t[i]}")
    return t


@dataclass(frozen=True, eq=False)
class DiagonalParams:
    """Bias, delay and replicating factors for one graph.

    Scalars broadcast to all ``n`` vertices. Delays below 1 are rejected unless
    ``allow_fractional_delay`` is set.
    """

    n: int
    bias: np.ndarray = 1.0
    delay: np.ndarray = 1.0
    replicate: np.ndarray = 1.0
    allow_fractional_delay: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bias", as_vector(self.bias, self.n, "bias B"))
        object.__setattr__(
            self, "delay", as_delay(self.delay, self.n, self.allow_fractional_delay)
        )
        object.__setattr__(self, "replicate", as_vector(self.replicate, self.n, "replicate Z"))


@dataclass(frozen=True, eq=False)
class ShiftOperator:
    """Dense operator with provenance.

    ``basis`` is the basis parameter rho in [0, 1], or None when it does not
    apply. The recipe's structural invariant is checked on construction.
    """

    matrix: np.ndarray
    recipe: str = "custom"
    basis: Optional[float] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"operator must be square, got shape {m.shape}")
        if self.recipe not in RECIPES:
            raise InputError(f"unknown recipe {self.recipe!r}")
        if self.recipe in ("random-walk", "consensus", "nonnegative") and np.any(m < 0):
            raise InputError(f"{self.recipe} operator has a negative entry")
        if self.recipe == "random-walk" and not np.allclose(m.sum(axis=1), 1, rtol=0, atol=OPERATOR_SUM_TOL):
            raise InputError("random-walk operator rows must sum to 1")
        if self.recipe == "consensus" and not np.allclose(m.sum(axis=0), 1, rtol=0, atol=OPERATOR_SUM_TOL):
            raise InputError("consensus operator columns must sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class ZLaplacian:
    """A Z-matrix together with the parameters that generated it, when known."""

    matrix: np.ndarray
    graph: Optional[Graph] = None
    replicate: Optional[np.ndarray] = None
    delay: Optional[np.ndarray] = None
    basis: Optional[float] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"Laplacian must be square, got shape {m.shape}")
        _check_z_matrix(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _check_z_matrix(m: np.ndarray) -> None:
    off = m - np.diag(np.diag(m))
    if np.any(off > 0):
        u, v = np.argwhere(off > 0)[0]
        raise InputError(f"not a Z-matrix: off-diagonal entry ({u}, {v}) = {m[u, v]} > 0")


def _positive_out_degrees(g: Graph) -> np.ndarray:
    d = g.out_degrees
    if np.any(d <= 0):
        raise InputError(f"vertex {int(np.flatnonzero(d <= 0)[0])} has zero out-degree")
    return d


def _positive_in_degrees(g: Graph) -> np.ndarray:
    d = g.in_degrees
    if np.any(d <= 0):
        raise InputError(f"vertex {int(np.flatnonzero(d <= 0)[0])} has zero in-degree")
    return d


def _require_undirected(g: Graph, what: str) -> None:
    if g.directed:
        raise InputError(f"{what} requires an undirected graph")


def random_walk_operator(g: Graph) -> ShiftOperator:
    """Row-stochastic transition matrix ``D_out^-1 A``."""
    d = _positive_out_degrees(g)
    return ShiftOperator(g.weights / d[:, None], "random-walk", 0.0)


def consensus_operator(g: Graph) -> ShiftOperator:
    """Column-stochastic averaging matrix ``A D_in^-1``."""
    d = _positive_in_degrees(g)
    return ShiftOperator(g.weights / d[None, :], "consensus", 1.0)


def random_walk_laplacian(g: Graph) -> np.ndarray:
    """``I - D_out^-1 A`` with off-diagonals negated exactly."""
    lap = -random_walk_operator(g).matrix
    lap[np.diag_indices_from(lap)] += 1.0
    return lap


def bias_transform(g: Graph, bias) -> Graph:
    """Graph whose unbiased random walk is the walk on ``g`` biased by ``bias``.

    Directed graphs become ``A B`` (column scaling); undirected graphs become
    ``B A B`` so that both directions of an edge keep equal weight.
    """
    b = as_vector(bias, g.n, "bias B")
    if g.directed:
        return Graph.from_matrix(g.weights * b[None, :], directed=True)
    return Graph.from_matrix(b[:, None] * g.weights * b[None, :], symmetrize=True)


def delay_transform(g: Graph, delay, allow_fractional: bool = False) -> Graph:
    """Absorb per-vertex delays into self-loops: ``W = D_out (T - I) + A``.

    Vertex ``u`` gains a self-loop of weight ``d_u (tau_u - 1)`` so that its
    degree in ``W`` becomes ``d_u tau_u``.
    """
    t = as_delay(delay, g.n, allow_fractional)
    loops = g.out_degrees * (t - 1.0)
    if np.any(loops < 0):
        raise InputError("fractional delays would create negative self-loops")
    w = np.array(g.weights)
    w[np.diag_indices(g.n)] += loops
    return Graph.from_matrix(w, directed=g.directed)


def z_laplacian(g: Graph, replicate=1.0, delay=1.0) -> ZLaplacian:
    """``T^-1 (I - Z D_out^-1 A)``.

    Delays here only need to be positive; the ``>= 1`` normalization belongs
    to the delay transformation, not to the Laplacian itself.
    """
    z = as_vector(replicate, g.n, "replicate Z")
    t = as_vector(delay, g.n, "delay T")
    p = random_walk_operator(g).matrix
    m = -(z[:, None] * p)
    m[np.diag_indices(g.n)] += 1.0
    return ZLaplacian(m / t[:, None], graph=g, replicate=z, delay=t)


def parameterized_laplacian(g: Graph, bias=1.0, delay=1.0) -> ZLaplacian:
    """``T^-1 (I - D_W^-1 W)`` with ``W`` the bias-transformed graph."""
    t = as_delay(delay, g.n)
    w = bias_transform(g, bias)
    lap = z_laplacian(w, 1.0, t)
    return ZLaplacian(lap.matrix, graph=w, replicate=lap.replicate, delay=t, basis=0.0)


def perron_eigenpair(g: Graph, tol: float = 1e-12, max_iter: int = 100_000):
    """Largest eigenvalue of ``A`` and its positive unit left eigenvector.

    Power iteration runs on ``A + I``: the shift leaves the eigenvectors alone
    but stops bipartite graphs (paths, stars) from oscillating between the
    ``+lambda`` and ``-lambda`` eigenvectors. Iteration stops once successive
    Rayleigh quotients agree to ``tol`` and the eigen-residual
    ``||v A - lambda v||`` is below ``10 * tol * lambda``.

    Returns:
        (lambda_max, v) with ``v @ A == lambda_max * v`` and ``||v||_2 == 1``.
    """
    if not is_connected(g):
        raise InputError("Perron eigenpair requires a connected graph")
    a = g.weights
    v = np.full(g.n, 1.0 / np.sqrt(g.n))
    lam = float(v @ a @ v)
    for _ in range(max_iter):
        nxt = v @ a + v
        nxt /= np.linalg.norm(nxt)
        va = nxt @ a
        new_lam = float(va @ nxt)
        resid = np.linalg.norm(va - new_lam * nxt)
        converged = abs(new_lam - lam) < tol and resid <= 10 * tol * max(new_lam, 1.0)
        v, lam = nxt, new_lam
        if converged:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    if lam <= 0:
        # a single vertex without a self-loop has A = [0]
        raise InputError("adjacency matrix has no positive Perron root")
    return lam, np.abs(v)


def replicator_operator(g: Graph) -> ShiftOperator:
    """``A / lambda_max``: the replicator under the symmetric basis."""
    _require_undirected(g, "replicator operator")
    lam, _ = perron_eigenpair(g)
    return ShiftOperator(g.weights / lam, "replicator", 0.5)


def replicator_random_walk_form(g: Graph):
    """Random-walk basis replicator ``D_W^-1 V A V`` with ``V = diag(v_A)``.

    Returns:
        (P_W, v_A, lambda_max); ``P_W`` is row-stochastic.
    """
    _require_undirected(g, "replicator operator")
    lam, v = perron_eigenpair(g)
    w = bias_transform(g, v)
    return random_walk_operator(w).matrix, v, lam


def similarity_transform(w: Graph, delay=1.0, rho: float = 0.5) -> ZLaplacian:
    """Parameterized Laplacian of ``w`` in basis ``rho``.

    ``(T D)^(rho - 1) (D - W) (T D)^(-rho)``: rho=0 is the random-walk basis,
    0.5 the symmetric one and 1 the consensus basis. All bases share one
    spectrum.
    """
    _require_undirected(w, "similarity transform")
    if not 0.0 <= rho <= 1.0:
        raise InputError(f"basis parameter must lie in [0, 1], got {rho}")
    t = as_delay(delay, w.n)
    d = _positive_out_degrees(w)
    td = t * d
    left = td ** (rho - 1.0)
    right = td ** (-rho)
    core = -w.weights
    core[np.diag_indices(w.n)] += d
    m = left[:, None] * core * right[None, :]
    if rho == 0.5:
        m = 0.5 * (m + m.T)
    return ZLaplacian(m, graph=w, replicate=np.ones(w.n), delay=t, basis=float(rho))


def sis_filter(g: Graph, mu: float, beta: float) -> ShiftOperator:
    """Linearized SIS update ``mu A + (1 - beta) I``."""
    for name, val in (("infection probability mu", mu), ("curing probability beta", beta)):
        if not 0.0 <= val <= 1.0:
            raise InputError(f"{name} must lie in [0, 1], got {val}")
    h = mu * g.weights
    h[np.diag_indices(g.n)] += 1.0 - beta
    return ShiftOperator(h, "SIS")


def nonnegative_filter(g: Graph, replicate=1.0) -> ShiftOperator:
    """Replicating random walk ``Z D_out^-1 A``; ``Z = 1`` gives the plain walk."""
    z = as_vector(replicate, g.n, "replicate Z")
    p = random_walk_operator(g).matrix
    return ShiftOperator(z[:, None] * p, "nonnegative", 0.0)


def dual_consensus_filter(g: Graph, replicate=1.0) -> ShiftOperator:
    """Consensus dual ``A D_in^-1 Z``: average over in-neighbours, then replicate."""
    z = as_vector(replicate, g.n, "replicate Z")
    c = consensus_operator(g).matrix
    return ShiftOperator(c * z[None, :], "dual", 1.0)


def adjacency_family_member(p, gamma) -> Graph:
    """The graph ``diag(gamma) P``, one member of the family whose walk is ``P``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InputError("transition matrix must be square")
    if np.any(p < 0) or not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=STOCHASTIC_TOL):
        raise InputError("transition matrix must be row-stochastic")
    g = as_vector(gamma, p.shape[0], "row scaling gamma")
    return Graph.from_matrix(g[:, None] * p, directed=True)


def basis_unify(g: Graph, replicate=1.0, rho: float = 0.0):
    """Dual graph and dual filter equivalent to ``Z D_out^-1 A`` in basis ``rho``.

    The dual graph is ``A' = Z P_A`` with ``Z' = D'``; the dual filter
    ``(D'^-1 Z')^(1-rho) A' (D'^-1 Z')^rho`` then reproduces the original
    filter for every rho.

    Returns:
        (A' as a directed Graph, dual filter matrix)
    """
    if not 0.0 <= rho <= 1.0:
        raise InputError(f"basis parameter must lie in [0, 1], got {rho}")
    z = as_vector(replicate, g.n, "replicate Z")
    dual = Graph.from_matrix(z[:, None] * random_walk_operator(g).matrix, directed=True)
    d_dual = dual.out_degrees
    ratio = z / d_dual
    h = ratio[:, None] ** (1.0 - rho) * dual.weights * ratio[None, :] ** rho
    return dual, h


def decompose_nonnegative(h):
    """Write a nonnegative matrix as ``Z D_out^-1 A`` with ``A = H``, ``Z`` its row sums.

    Returns:
        (Graph, Z vector)
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError("matrix must be square")
    if np.any(h < 0):
        raise InputError("matrix must be nonnegative")
    z = h.sum(axis=1)
    if np.any(z <= 0):
        raise InputError(f"row {int(np.flatnonzero(z <= 0)[0])} is zero: no random-walk interpretation")
    return Graph.from_matrix(h, directed=True), z


def decompose_z_matrix(lap):
    """Write a Z-matrix ``L`` as ``(1/delta) (I - Z D_out^-1 A)``.

    ``delta = 1`` whenever the diagonal of ``L`` is nonnegative and
    ``I - L`` is nonnegative; otherwise ``delta = 1 / max_i |L_ii|``. If that
    bound leaves a row of ``I - delta L`` empty (a vertex whose only entry is
    the largest diagonal), delta is halved so the vertex keeps a self-loop.
    The graph is ``A = I - delta L`` and ``Z`` its row sums.

    Returns:
        (Graph, Z vector, delta)
    """
    m = np.asarray(lap, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("matrix must be square")
    _check_z_matrix(m)
    diag = np.diag(m)
    eye = np.eye(m.shape[0])
    if np.all(diag >= 0) and np.all(eye - m >= 0):
        delta = 1.0
    else:
        delta = 1.0 / np.max(np.abs(diag))
    a = eye - delta * m
    # off-diagonals are exactly >= 0; clip diagonal round-off at the boundary
    a[np.diag_indices_from(a)] = np.maximum(np.diag(a), 0.0)
    z = a.sum(axis=1)
    if np.any(z <= 0):
        delta /= 2.0
        a = eye - delta * m
        z = a.sum(axis=1)
    if np.any(z <= 0):
        raise InputError(f"row {int(np.flatnonzero(z <= 0)[0])} of I - delta*L is zero")
    return Graph.from_matrix(a, directed=True), z, delta

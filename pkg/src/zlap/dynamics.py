"""Signal evolution under discrete filters and continuous Z-Laplacians.

Continuous evolution ``theta(t) = theta(0) exp(-L t)`` is computed by
uniformization: with ``Phi = I - L / lam`` the solution is a Poisson-weighted
sum of powers of ``Phi``. ``matrix_exp_oracle`` is an independent
scaling-and-squaring Taylor evaluation used to cross-check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from zlap.errors import InputError
from zlap.graph import Graph
from zlap.operators import (
    ShiftOperator,
    as_vector,
    perron_eigenpair,
    random_walk_operator,
    sis_filter,
)

__all__ = [
    "EvolutionReport",
    "evolve_discrete",
    "apply_polynomial_filter",
    "discrete_approximation",
    "evolve_continuous",
    "evolve_continuous_many",
    "poisson_weights",
    "matrix_exp_oracle",
    "waiting_steps",
    "simulate_sojourn_steps",
    "EpidemicClass",
    "classify_epidemic",
]

# Tolerance for calling a growth factor exactly 1 (or mu/beta exactly critical).
CRITICAL_TOL = 1e-9


def _matrix(op) -> np.ndarray:
    return np.asarray(op.matrix if hasattr(op, "matrix") else op, dtype=float)


def _signal(theta, n: int) -> np.ndarray:
    s = np.asarray(theta, dtype=float)
    if s.shape != (n,):
        raise InputError(f"signal must have length {n}, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InputError("signal entries must be finite")
    return s


@dataclass
class EvolutionReport:
    """Trajectory of a discrete evolution.

    ``growth`` is the spectral radius of the filter; ``classification`` is
    ``expanding``, ``conservative`` or ``shrinking`` depending on whether it
    is above, at or below 1.
    """

    trajectory: list = field(default_factory=list)
    classification: str = "conservative"
    growth: float = 1.0

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1][1]

    def sums(self) -> np.ndarray:
        return np.array([s.sum() for _, s in self.trajectory])


def _classify_growth(growth: float) -> str:
    if growth > 1 + CRITICAL_TOL:
        return "expanding"
    if growth < 1 - CRITICAL_TOL:
        return "shrinking"
    return "conservative"


def evolve_discrete(theta0, h, steps: int) -> EvolutionReport:
    """Apply ``theta <- theta @ H`` ``steps`` times, recording every step."""
    m = _matrix(h)
    theta = _signal(theta0, m.shape[0])
    if steps < 0:
        raise InputError(f"steps must be >= 0, got {steps}")
    traj = [(0, theta.copy())]
    for k in range(1, steps + 1):
        theta = theta @ m
        traj.append((k, theta))
    growth = float(np.max(np.abs(np.linalg.eigvals(m))))
    return EvolutionReport(traj, _classify_growth(growth), growth)


def apply_polynomial_filter(theta0, s, coeffs: Sequence[float]) -> np.ndarray:
    """``theta0 (h_0 I + h_1 S + ... + h_l S^l)`` by Horner's rule on the vector."""
    m = _matrix(s)
    theta = _signal(theta0, m.shape[0])
    if len(coeffs) == 0:
        raise InputError("need at least one filter coefficient")
    out = coeffs[-1] * theta
    for h in reversed(coeffs[:-1]):
        out = out @ m + h * theta
    return out


def discrete_approximation(lap, delta: float) -> ShiftOperator:
    """One-step filter ``Phi = I - delta L``.

    Raises if ``delta`` would make a diagonal entry of ``Phi`` negative.
    """
    m = _matrix(lap)
    if delta <= 0:
        raise InputError(f"step delta must be positive, got {delta}")
    diag = 1.0 - delta * np.diag(m)
    if np.any(diag < -1e-12):
        worst = float(np.max(np.abs(np.diag(m))))
        raise InputError(f"delta={delta} too large; need delta <= {1.0 / worst}")
    phi = -delta * m
    phi[np.diag_indices_from(phi)] = np.maximum(diag, 0.0)
    return ShiftOperator(phi, "nonnegative")


def poisson_weights(mean: float, kmax: int) -> np.ndarray:
    """Poisson pmf on ``0..kmax``.

    Computed by the ratio recurrence outward from the mode, then renormalized,
    so large means neither underflow at ``k = 0`` nor overflow at the mode.
    """
    if mean < 0:
        raise InputError(f"Poisson mean must be >= 0, got {mean}")
    w = np.zeros(kmax + 1)
    if mean == 0:
        w[0] = 1.0
        return w
    mode = min(int(math.floor(mean)), kmax)
    w[mode] = 1.0
    for k in range(mode + 1, kmax + 1):
        w[k] = w[k - 1] * mean / k
    for k in range(mode - 1, -1, -1):
        w[k] = w[k + 1] * (k + 1) / mean
    return w / w.sum()


def _poisson_kmax(mean: float) -> int:
    # far beyond any tail we will ever cut at; the pmf there underflows to 0
    return int(math.ceil(mean + 12.0 * math.sqrt(mean) + 40.0))


def _truncation_index(mean: float, eps: float) -> int:
    w = poisson_weights(mean, _poisson_kmax(mean))
    cdf = np.cumsum(w)
    return int(min(np.searchsorted(cdf, 1.0 - eps), len(w) - 1))


def evolve_continuous(theta0, lap, t: float, eps: float = 1e-12, rate: Optional[float] = None) -> np.ndarray:
    """``theta0 exp(-L t)`` by uniformization.

    Args:
        theta0: initial row signal.
        lap: ZLaplacian or Z-matrix.
        t: time, >= 0.
        eps: Poisson tail tolerance in (0, 1e-6].
        rate: uniformization rate; defaults to the smallest valid one,
            ``max_i |L_ii|`` (1 if the diagonal vanishes).

    The series is truncated at the smallest ``K`` whose Poisson mass reaches
    ``1 - eps``. When ``Phi`` can grow a signal (row sums above 1, i.e.
    replicating factors above 1) the Poisson mean is inflated by that
    growth bound ``c`` so the dropped tail stays below ``eps * exp(lam t (c-1))``.
    The kept weights are rescaled to sum to 1.
    """
    m = _matrix(lap)
    n = m.shape[0]
    theta = _signal(theta0, n)
    if t < 0:
        raise InputError(f"time must be >= 0, got {t}")
    if not 0 < eps <= 1e-6:
        raise InputError(f"tail tolerance must lie in (0, 1e-6], got {eps}")
    lam = _uniformization_rate(m, rate)
    phi = np.eye(n) - m / lam
    growth = max(1.0, float(np.max(np.abs(phi).sum(axis=1))))
    mean = lam * t
    k_stop = _truncation_index(mean * growth, eps)
    weights = poisson_weights(mean, max(k_stop, _poisson_kmax(mean)))[: k_stop + 1]
    # put the dropped tail mass back so conservative chains conserve exactly
    weights = weights / weights.sum()
    out = weights[0] * theta
    term = theta
    for k in range(1, k_stop + 1):
        term = term @ phi
        out = out + weights[k] * term
    return out


def evolve_continuous_many(theta0, lap, times: Sequence[float], eps: float = 1e-12) -> list:
    """Evaluate ``evolve_continuous`` independently at each requested time."""
    times = list(times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError("times must be strictly increasing")
    return [(float(t), evolve_continuous(theta0, lap, t, eps)) for t in times]


def _uniformization_rate(m: np.ndarray, rate: Optional[float]) -> float:
    floor = float(np.max(np.abs(np.diag(m))))
    if rate is None:
        return floor if floor > 0 else 1.0
    if rate < floor or rate <= 0:
        raise InputError(f"uniformization rate {rate} below the minimum {floor}")
    return float(rate)


def matrix_exp_oracle(m, t: float = 1.0) -> np.ndarray:
    """``exp(M t)`` by scaling and squaring a truncated Taylor series.

    The matrix is halved until its infinity norm is at most 0.5, the Taylor
    series is summed until a term's norm drops below 1e-18, and the result is
    squared back up.
    """
    a = np.asarray(m, dtype=float) * t
    if not np.all(np.isfinite(a)):
        raise InputError("matrix entries must be finite")
    n = a.shape[0]
    norm = float(np.max(np.abs(a).sum(axis=1))) if n else 0.0
    squarings = 0
    if norm > 0.5:
        squarings = int(math.ceil(math.log2(norm / 0.5)))
        a = a / 2.0**squarings
    result = np.eye(n)
    term = np.eye(n)
    k = 0
    while True:
        k += 1
        term = term @ a / k
        result = result + term
        if np.max(np.abs(term).sum(axis=1)) < 1e-18:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def waiting_steps(delay) -> np.ndarray:
    """Expected number of steps the discrete walk ``Phi`` spends at each vertex.

    With step size ``delta = min(T)`` a vertex stays put with probability
    ``1 - delta / tau_v``, giving a geometric sojourn of mean ``tau_v / delta``.
    """
    t = np.asarray(delay, dtype=float)
    t = as_vector(t, t.size, "delay T")
    return t / t.min()


def simulate_sojourn_steps(
    g: Graph,
    delay,
    visits: int = 100_000,
    seed: int = 20240501,
) -> np.ndarray:
    """Monte-Carlo mean sojourn length at each vertex of the chain
    ``Phi = (I - delta T^-1) + delta T^-1 P`` with ``delta = min(T)``.

    For every vertex, ``visits`` independent walkers start there; each step
    draws the next state from the corresponding row of ``Phi`` and a walker
    is retired the first time it lands elsewhere. ``g`` must be loopless so
    that every departure from ``Phi``'s off-diagonal part is a real move.
    """
    t = as_vector(delay, g.n, "delay T")
    if np.any(np.diag(g.weights) > 0):
        raise InputError("sojourn simulation needs a graph without self-loops")
    delta = t.min()
    p = random_walk_operator(g).matrix
    stay = 1.0 - delta / t
    phi = (delta / t)[:, None] * p
    phi[np.diag_indices(g.n)] += stay
    cdf = np.cumsum(phi, axis=1)
    cdf[:, -1] = 1.0
    rng = np.random.default_rng(seed)
    means = np.empty(g.n)
    for v in range(g.n):
        steps = np.zeros(visits, dtype=np.int64)
        active = np.arange(visits)
        while active.size:
            steps[active] += 1
            nxt = np.searchsorted(cdf[v], rng.random(active.size), side="right")
            active = active[nxt == v]
        means[v] = steps.mean()
    return means


@dataclass(frozen=True)
class EpidemicClass:
    """Outcome of the SIS threshold test.

    ``ratio`` is mu/beta and ``threshold`` is 1/lambda_max. The optional
    fields are filled when a uniform replicating factor ``z`` is supplied.
    """

    regime: str
    ratio: float
    threshold: float
    lambda_max: float
    spectral_radius: float
    transmissibility: Optional[float] = None
    generalized_threshold: Optional[float] = None
    z: Optional[float] = None


def classify_epidemic(g: Graph, mu: float, beta: float, z: Optional[float] = None) -> EpidemicClass:
    """Compare the effective transmissibility ``mu / beta`` with ``1 / lambda_max``."""
    sis_filter(g, mu, beta)  # parameter range checks
    lam, _ = perron_eigenpair(g)
    threshold = 1.0 / lam
    radius = mu * lam + (1.0 - beta)
    if beta == 0:
        ratio = math.inf if mu > 0 else math.nan
        regime = "supercritical" if mu > 0 else "critical"
    else:
        ratio = mu / beta
        if abs(ratio - threshold) <= CRITICAL_TOL * max(threshold, 1.0):
            regime = "critical"
        else:
            regime = "supercritical" if ratio > threshold else "subcritical"
    transmissibility = generalized = None
    if z is not None:
        transmissibility = z / (lam * beta) if beta > 0 else math.inf
        denom = (z + beta - 1.0) * lam
        generalized = z / denom if denom != 0 else math.inf
    return EpidemicClass(
        regime=regime,
        ratio=ratio,
        threshold=threshold,
        lambda_max=lam,
        spectral_radius=radius,
        transmissibility=transmissibility,
        generalized_threshold=generalized,
        z=z,
    )

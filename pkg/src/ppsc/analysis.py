"""Convergence and encryption-time analysis of randomized PPSC gossip."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .mechanism import GossipMatrix, derive_seed, make_rng, sample_interactions
from .netgraph import DisconnectedGraphError, Graph, IndependentPartition

MAX_BLOCK = 16
MC_CHUNK = 4096


@dataclass(frozen=True)
class ExpectedDynamics:
    """Expected one-step map ``E[x(t)] = a_bar E[x(t-1)] + mu * v_bar``."""

    a_bar: np.ndarray
    v_bar: np.ndarray
    q1: np.ndarray


@dataclass(frozen=True)
class EncryptionStats:
    xi: np.ndarray
    xi_m: float
    q_t: np.ndarray
    half_width: np.ndarray
    runs: int
    xi_hat: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, self.q_t.size + 1)

    def t_eps(self, epsilon: float) -> int | None:
        """First t with ``1 - q_t <= epsilon``, or None if not reached."""
        hit = np.nonzero(1.0 - self.q_t <= epsilon)[0]
        return int(hit[0]) + 1 if hit.size else None


def _require_connected(g: Graph) -> None:
    missing = g.unreachable_from(1)
    if missing:
        raise DisconnectedGraphError(missing[0])


def perron_vector(p: GossipMatrix) -> np.ndarray:
    """Left Perron vector of P normalised to sum one."""
    basis = numerics.kernel_basis(np.eye(p.P.shape[0]) - p.P.T)
    if basis.shape[1] != 1:
        raise numerics.NumericsError(f"expected a one-dimensional Perron space, got {basis.shape[1]}")
    q = basis[:, 0]
    return q / q.sum()


def expected_dynamics(p: GossipMatrix) -> ExpectedDynamics:
    n = p.P.shape[0]
    a_bar = np.eye(n) + (p.P.T - np.eye(n)) / n
    v_bar = (np.eye(n) - p.P.T) @ np.ones(n) / n
    return ExpectedDynamics(a_bar, v_bar, perron_vector(p))


def mean_limit(g: Graph, p: GossipMatrix, x0, mu_gamma: float) -> np.ndarray:
    """Limit of ``E[x(t)]``: the fixed point of the expected dynamics with the initial sum.

    Solved as ``(I - a_bar) m = mu * v_bar`` subject to ``1^T m = 1^T x0``.
    """
    _require_connected(g)
    x0 = np.asarray(x0, dtype=float)
    n = g.n
    dyn = expected_dynamics(p)
    sol = numerics.solve_kkt(np.eye(n) - dyn.a_bar, np.ones((1, n)), mu_gamma * dyn.v_bar, [x0.sum()])
    if not sol.unique:
        raise numerics.NumericsError("mean-limit system is rank deficient beyond its Perron direction")
    return sol.solution


def xi_vector(p: GossipMatrix) -> np.ndarray:
    """Per-step probability that each node takes part in an interaction."""
    n = p.P.shape[0]
    return (p.P + p.P.T) @ np.ones(n) / n


def encryption_prob_lower_bound(g: Graph, p: GossipMatrix, part: IndependentPartition, t) -> np.ndarray:
    """Inclusion-exclusion lower bound on ``P(Q_t)`` over an independent partition.

    Accepts scalar or array ``t`` and enumerates every subset of each block
    minus its representative, so blocks are capped at ``MAX_BLOCK`` nodes.
    """
    part.validate(g)
    for block in part.blocks:
        if len(block) > MAX_BLOCK:
            raise ValueError(
                f"block of size {len(block)} exceeds {MAX_BLOCK}; use encryption_time_bounds instead")
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise ValueError("t must be at least 1")
    xi = xi_vector(p)
    total = np.full(t.shape, 1.0 - part.kappa)
    for block, rep in zip(part.blocks, part.representatives):
        rest = [j for j in block if j != rep]
        xr = xi[rep - 1]
        for size in range(len(rest) + 1):
            sign = -1.0 if size % 2 else 1.0
            for u in itertools.combinations(rest, size):
                s = sum(xi[j - 1] for j in u)
                total = total + sign * (np.maximum(1.0 - s, 0.0) ** t - np.maximum(1.0 - xr - s, 0.0) ** t)
    return total


def singleton_lower_bound(p: GossipMatrix, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    xi = xi_vector(p)
    return 1.0 - ((1.0 - xi)[:, None] ** t.reshape(1, -1)).sum(axis=0).reshape(t.shape)


def encryption_prob_upper_bound(p: GossipMatrix, t) -> np.ndarray:
    xi_m = float(xi_vector(p).min())
    return 1.0 - (1.0 - xi_m) ** np.asarray(t, dtype=float)


def encryption_time_bounds(g: Graph, p: GossipMatrix, epsilon: float) -> tuple[float, float]:
    """Lower and upper bounds on the epsilon-encryption time."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    _require_connected(g)
    xi_m = float(xi_vector(p).min())
    if xi_m >= 1.0 - 1e-15:
        return 1.0, 1.0
    denom = math.log(1.0 - xi_m)
    return math.log(epsilon) / denom, (math.log(epsilon) - math.log(g.n)) / denom


def wilson_half_width(k, n: int, z: float = 1.96) -> np.ndarray:
    """Half-width of the Wilson score interval for ``k`` successes out of ``n``."""
    phat = np.asarray(k, dtype=float) / n
    denom = 1.0 + z * z / n
    return z * np.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom


def estimate_q_t(g: Graph, p: GossipMatrix, t_max: int, runs: int, seed) -> EncryptionStats:
    """Monte Carlo estimate of ``P(Q_t)`` for ``t = 1..t_max`` from edge selection alone.

    Runs are simulated in chunks of ``MC_CHUNK``; chunk ``c`` draws from the
    stream ``derive_seed(seed, c)``, so results do not depend on scheduling.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    _require_connected(g)
    n = g.n
    cum = np.cumsum(p.P, axis=1)
    cum[:, -1] = 1.0
    all_touched = np.zeros(t_max, dtype=np.int64)
    involvement = np.zeros(n, dtype=np.int64)
    for c, start in enumerate(range(0, runs, MC_CHUNK)):
        size = min(MC_CHUNK, runs - start)
        rng = make_rng(derive_seed(seed, c))
        touched = np.zeros((size, n), dtype=bool)
        rows = np.arange(size)
        for k in range(t_max):
            i, j = sample_interactions(cum, size, rng)
            touched[rows, i] = True
            touched[rows, j] = True
            if k == 0:
                involvement += np.bincount(i, minlength=n) + np.bincount(j, minlength=n)
            all_touched[k] += int(touched.all(axis=1).sum())
    xi = xi_vector(p)
    return EncryptionStats(
        xi=xi,
        xi_m=float(xi.min()),
        q_t=all_touched / runs,
        half_width=wilson_half_width(all_touched, runs),
        runs=runs,
        xi_hat=involvement / runs,
    )

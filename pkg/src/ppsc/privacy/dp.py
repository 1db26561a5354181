"""Non-identifiability certificate and differential-privacy budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import numerics
from ..mechanism import make_rng
from ..symbolic import GraphicalModel, MechanismMatrices


@dataclass(frozen=True)
class DpParams:
    delta: float
    v: float
    epsilon: float | None = None

    def __post_init__(self):
        if self.delta <= 0 or self.v <= 0:
            raise ValueError("delta and v must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class NonIdentifiability:
    certificate: np.ndarray
    ok: bool

    @property
    def kernel_dim(self) -> int:
        return self.certificate.shape[1]


def check_non_identifiability(m: MechanismMatrices, tol: float | None = None) -> NonIdentifiability:
    """Kernel basis of C; any column shifts beta without changing the output law."""
    basis = numerics.kernel_basis(m.C, tol)
    return NonIdentifiability(basis, basis.shape[1] > 0)


def dp_budget(m: MechanismMatrices, gm: GraphicalModel, delta: float, v: float) -> float:
    """Smallest epsilon certified for Laplace noise of scale ``v`` under delta-adjacency."""
    if delta <= 0 or v <= 0:
        raise ValueError("delta and v must be positive")
    d = np.asarray(m.D, dtype=float)
    n = m.n
    sigma_m = numerics.smallest_abs_eigenvalue(d.T @ d)
    return delta * math.sqrt(n - 1) * gm.max_degree() / (v * abs(sigma_m))


def is_adjacent(beta, beta_prime, delta: float, tol: float = 1e-12) -> bool:
    """Equal sums and ``|beta - beta'|_1 <= delta``."""
    b = np.asarray(beta, dtype=float)
    bp = np.asarray(beta_prime, dtype=float)
    scale = 1.0 + np.abs(b).sum()
    return (b.shape == bp.shape
            and abs(b.sum() - bp.sum()) <= tol * scale
            and np.abs(b - bp).sum() <= delta * (1.0 + tol))


def left_inverse(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return np.linalg.solve(d.T @ d, d.T)


def dp_ratio_check(m: MechanismMatrices, beta, beta_prime, v: float, trials: int, seed=None,
                   delta: float | None = None) -> float:
    """Largest observed log density ratio between outputs from beta and beta'.

    Outputs are drawn as ``C beta + D gamma`` with i.i.d. Laplace(v) noise and
    mapped back to noise coordinates with the left inverse of D, where the
    density is a product of Laplace densities.
    """
    b = np.asarray(beta, dtype=float)
    bp = np.asarray(beta_prime, dtype=float)
    if delta is None:
        delta = float(np.abs(b - bp).sum()) or 1.0
    if not is_adjacent(b, bp, delta):
        raise ValueError("inputs are not delta-adjacent")
    c = np.asarray(m.C, dtype=float)
    d = np.asarray(m.D, dtype=float)
    linv = left_inverse(d)
    rng = make_rng(seed)
    gamma = rng.laplace(0.0, v, size=(trials, d.shape[1]))
    outputs = b @ c.T + gamma @ d.T
    z = (outputs - b @ c.T) @ linv.T
    zp = (outputs - bp @ c.T) @ linv.T
    log_ratio = (np.abs(zp).sum(axis=1) - np.abs(z).sum(axis=1)) / v
    return float(np.max(log_ratio)) if trials else 0.0

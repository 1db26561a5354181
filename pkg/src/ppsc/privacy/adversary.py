"""MLE and MAP reconstruction of the inputs from observed mechanism outputs.

The eavesdropper model assumes i.i.d. Gaussian noise N(0, sigma^2) and knows
C, D and sigma^2.  The degenerate Gaussian likelihood is handled by
conditioning the first output coordinate on the rest: that conditional is a
point mass on the sum constraint, which becomes a hard equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numerics
from ..symbolic import MechanismMatrices


@dataclass
class AdversaryObservations:
    samples: np.ndarray
    mechanism: MechanismMatrices
    noise_sigma2: float

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.samples, dtype=float))
        n = self.mechanism.n
        if y.shape[1] != n:
            raise ValueError(f"samples must have length {n}")
        if y.shape[0] < 1:
            raise ValueError("need at least one sample")
        if self.noise_sigma2 <= 0:
            raise ValueError("noise variance must be positive")
        sums = y.sum(axis=1)
        if np.max(np.abs(sums - sums[0])) > 1e-8 * (1.0 + np.abs(y).sum(axis=1).max()):
            raise ValueError("samples do not share a common sum")
        self.samples = y

    @property
    def l(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class PriorModel:
    mu_beta: np.ndarray
    lambda_beta: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lambda_beta, dtype=float))
        object.__setattr__(self, "mu_beta", np.asarray(self.mu_beta, dtype=float))
        object.__setattr__(self, "lambda_beta", lam)
        if not numerics.is_symmetric(lam, 1e-10):
            raise ValueError("prior covariance must be symmetric")
        if numerics.jacobi_eigh(lam).eigenvalues[0] <= 0:
            raise ValueError("prior covariance must be positive definite")

    @classmethod
    def isotropic(cls, mu, tau: float) -> "PriorModel":
        mu = np.asarray(mu, dtype=float)
        return cls(mu, tau * np.eye(mu.size))


@dataclass(frozen=True)
class MleResult:
    point: np.ndarray
    directions: np.ndarray
    unique: bool
    multiplier: float
    residual: float

    @property
    def kernel_dim(self) -> int:
        return self.directions.shape[1]

    def membership_residual(self, beta) -> float:
        """Distance from ``beta`` to the affine solution set."""
        diff = np.asarray(beta, dtype=float) - self.point
        q = self.directions
        return float(np.linalg.norm(diff - q @ (q.T @ diff)))


@dataclass(frozen=True)
class MapResult:
    point: np.ndarray
    multiplier: float
    residuals: dict = field(default_factory=dict)


def lambda_d_entrywise(d, sigma2: float) -> np.ndarray:
    """Noise covariance of ``D gamma`` from the row structure of D."""
    d = np.asarray(d)
    n = d.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        out[i, i] = sigma2 * float(np.sum(d[i] ** 2))
        for j in range(n):
            if i != j and np.any(d[i] * d[j] == -1):
                out[i, j] = -sigma2
    return out


def lambda_d(d, sigma2: float) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return sigma2 * d @ d.T


def weight_matrix(m: MechanismMatrices, sigma2: float) -> np.ndarray:
    """``Lambda_*``: zero for the first coordinate, inverse covariance of the rest."""
    lam = lambda_d(m.D, sigma2)
    n = m.n
    lam_yy = lam[1:, 1:]
    if numerics.rank(lam_yy) < n - 1:
        raise numerics.NumericsError("conditioned covariance block is singular")
    w = np.zeros((n, n))
    w[1:, 1:] = np.linalg.inv(lam_yy)
    return w


def _normal_equations(obs: AdversaryObservations):
    c = np.asarray(obs.mechanism.C, dtype=float)
    w = weight_matrix(obs.mechanism, obs.noise_sigma2)
    h = obs.l * c.T @ w @ c
    g = c.T @ w @ obs.samples.sum(axis=0)
    return h, g


def kkt_residuals(h, g, point, multiplier, total) -> dict:
    """Stationarity residual relative to the system scale, and the sum-constraint gap."""
    n = point.size
    stationarity = h @ point + multiplier * np.ones(n) - g
    scale = 1.0 + np.linalg.norm(h, 2) * np.linalg.norm(point) + np.linalg.norm(g)
    return {
        "stationarity": float(np.linalg.norm(stationarity) / scale),
        "constraint": float(abs(point.sum() - total)),
    }


def mle_estimate(obs: AdversaryObservations) -> MleResult:
    """Minimum-norm MLE and the directions along which it is undetermined."""
    h, g = _normal_equations(obs)
    n = obs.mechanism.n
    total = float(obs.samples[0].sum())
    sol = numerics.solve_kkt(h, np.ones((1, n)), g, [total])
    kernel = numerics.kernel_basis(numerics.saddle_matrix(h, np.ones((1, n))))
    directions = kernel[:n]
    if directions.size:
        # kernel vectors have zero multiplier part; re-orthonormalise the beta block
        u, s, _ = np.linalg.svd(directions, full_matrices=False)
        directions = u[:, s > 1e-8]
    res = kkt_residuals(h, g, sol.solution, float(sol.multipliers[0]), total)
    return MleResult(sol.solution, directions, sol.unique, float(sol.multipliers[0]),
                     max(res.values()))


def map_estimate(obs: AdversaryObservations, prior: PriorModel) -> MapResult:
    h, g = _normal_equations(obs)
    n = obs.mechanism.n
    prec = np.linalg.inv(prior.lambda_beta)
    h = h + prec
    g = g + prec @ prior.mu_beta
    total = float(obs.samples[0].sum())
    sol = numerics.solve_kkt(h, np.ones((1, n)), g, [total])
    if not sol.unique:
        raise numerics.NumericsError("MAP system is singular")
    res = kkt_residuals(h, g, sol.solution, float(sol.multipliers[0]), total)
    return MapResult(sol.solution, float(sol.multipliers[0]), res)

"""Resilience/privacy trade-off for the injected noise under node dropout."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TradeoffParams:
    p_d: float
    nu: float
    mu_tilde: float
    sigma_tilde2: float

    def __post_init__(self):
        if not 0 < self.p_d < 1:
            raise ValueError("dropout probability must lie in (0, 1)")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.sigma_tilde2 <= 0:
            raise ValueError("state variance must be positive")


@dataclass(frozen=True)
class TradeoffResult:
    rho_gamma: float
    sigma_gamma2: float
    u_r: float
    u_p: float
    objective: float


def resilience_metric(p: TradeoffParams, rho_gamma, sigma_gamma2):
    """Expected squared perturbation of the network sum when the packet is lost."""
    return 2.0 * p.p_d * (1.0 - p.p_d) * ((p.mu_tilde - rho_gamma) ** 2 + p.sigma_tilde2 + sigma_gamma2)


def privacy_metric(p: TradeoffParams, sigma_gamma2):
    """Conditional entropy of the sender's state given the packet (Gaussian case)."""
    return 0.5 * math.log(2 * math.pi * math.e) - 0.5 * np.log(1.0 / p.sigma_tilde2 + 1.0 / np.asarray(sigma_gamma2))


def objective(p: TradeoffParams, rho_gamma, sigma_gamma2):
    return resilience_metric(p, rho_gamma, sigma_gamma2) - p.nu * privacy_metric(p, sigma_gamma2)


def tradeoff_optimize(p: TradeoffParams, family: str = "gaussian") -> TradeoffResult:
    """Closed-form minimiser of ``U_R - nu * U_P`` over noise mean and variance."""
    if family != "gaussian":
        raise ValueError("the entropy metric assumes Gaussian noise; got " + repr(family))
    st = math.sqrt(p.sigma_tilde2)
    s2 = 0.5 * st * (math.sqrt(p.sigma_tilde2 + p.nu / (p.p_d * (1.0 - p.p_d))) - st)
    rho = p.mu_tilde
    u_r = float(resilience_metric(p, rho, s2))
    u_p = float(privacy_metric(p, s2))
    return TradeoffResult(rho, s2, u_r, u_p, u_r - p.nu * u_p)

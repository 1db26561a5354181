"""Numeric D-PPSC / R-PPSC gossip runs.

Randomness: every run owns a Philox stream derived from ``(master_seed,
run_index)`` via :func:`derive_seed`.  Within a run, step ``t`` consumes its
draws in a fixed order (initiator, neighbour, noise), so a trace is a pure
function of its seed regardless of how runs are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .netgraph import Graph, GraphError, OrientedTree

FAMILIES = ("gaussian", "laplace", "uniform")


def derive_seed(master: int, index: int) -> int:
    """Deterministic 64-bit per-run seed."""
    words = np.random.SeedSequence([int(master), int(index)]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class NoiseModel:
    """Noise law with a given mean and variance.

    Laplace noise with variance ``2 v**2`` has scale ``v``; uniform noise
    spans ``mean +- sqrt(3 * variance)``.
    """

    family: str = "gaussian"
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"noise variance must be positive, got {self.variance}")
        if not math.isfinite(self.mean):
            raise ValueError("noise mean must be finite")

    @classmethod
    def laplace(cls, v: float, mean: float = 0.0) -> "NoiseModel":
        return cls("laplace", mean, 2.0 * v * v)

    @property
    def scale(self) -> float:
        if self.family == "laplace":
            return math.sqrt(self.variance / 2.0)
        if self.family == "uniform":
            return math.sqrt(3.0 * self.variance)
        return math.sqrt(self.variance)

    def sample(self, rng: np.random.Generator, size=None):
        if self.family == "gaussian":
            return rng.normal(self.mean, self.scale, size)
        if self.family == "laplace":
            return rng.laplace(self.mean, self.scale, size)
        return rng.uniform(self.mean - self.scale, self.mean + self.scale, size)

    def to_dict(self) -> dict:
        return {"family": self.family, "mean": self.mean, "variance": self.variance}


def sample_noise(noise: NoiseModel, rng: np.random.Generator) -> float:
    return float(noise.sample(rng))


@dataclass(frozen=True)
class GossipMatrix:
    """Row-stochastic neighbour-selection matrix aligned with a graph."""

    graph: Graph
    P: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.P, dtype=float)
        n = self.graph.n
        if p.shape != (n, n):
            raise GraphError(f"gossip matrix must be {n}x{n}, got {p.shape}")
        if np.any(p < 0):
            raise GraphError("gossip matrix has negative entries")
        if not np.allclose(p.sum(axis=1), 1.0, atol=1e-12):
            raise GraphError("gossip matrix rows must sum to one")
        adj = self.graph.adjacency_matrix() > 0
        if np.any((p > 0) != adj):
            raise GraphError("gossip matrix support must equal the edge set")
        object.__setattr__(self, "P", p)


def uniform_gossip_matrix(g: Graph) -> GossipMatrix:
    a = g.adjacency_matrix()
    deg = a.sum(axis=1)
    if np.any(deg == 0):
        raise GraphError("isolated node has no neighbour to gossip with")
    return GossipMatrix(g, a / deg[:, None])


def random_gossip_matrix(g: Graph, rng: np.random.Generator) -> GossipMatrix:
    w = g.adjacency_matrix() * rng.uniform(0.2, 1.0, size=(g.n, g.n))
    return GossipMatrix(g, w / w.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class TraceStep:
    t: int
    tail: int
    head: int
    gamma: float
    omega: float
    state: tuple[float, ...]


@dataclass
class RunTrace:
    algorithm: str
    seed: int | None
    initial: tuple[float, ...]
    steps: list[TraceStep] = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        if not self.steps:
            return np.array(self.initial)
        return np.array(self.steps[-1].state)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(s.tail, s.head) for s in self.steps]

    @property
    def gammas(self) -> np.ndarray:
        return np.array([s.gamma for s in self.steps])

    def to_dict(self, graph_ref: str | None = None, redact: bool = False) -> dict:
        """Serialisable form; ``redact`` keeps only the on-wire packets."""
        steps = []
        for s in self.steps:
            rec = {"t": s.t, "tail": s.tail, "head": s.head, "omega": s.omega}
            if not redact:
                rec["gamma"] = s.gamma
                rec["state"] = list(s.state)
            steps.append(rec)
        return {
            "seed": self.seed,
            "algorithm": self.algorithm,
            "graph_ref": graph_ref,
            "steps": steps,
            "final": [float(x) for x in self.final],
        }


def _gossip_step(x: np.ndarray, tail: int, head: int, gamma: float) -> float:
    omega = x[tail - 1] - gamma
    x[tail - 1] = gamma
    x[head - 1] = x[head - 1] + omega
    return omega


def run_dppsc(t: OrientedTree, beta, noise: NoiseModel, seed=None,
              gammas: Sequence[float] | None = None) -> RunTrace:
    """Deterministic PPSC gossip along the tree's ordered edges.

    ``gammas`` pins the injected noise (length ``n - 1``) instead of sampling.
    """
    x = np.array(beta, dtype=float)
    if x.shape != (t.n,):
        raise ValueError(f"beta must have length {t.n}")
    if gammas is not None and len(gammas) != len(t.directed_edges):
        raise ValueError(f"need {len(t.directed_edges)} pinned gammas")
    rng = make_rng(seed) if gammas is None else None
    trace = RunTrace("dppsc", seed, tuple(float(v) for v in x))
    for k, (tail, head) in enumerate(t.directed_edges):
        gamma = float(gammas[k]) if gammas is not None else sample_noise(noise, rng)
        omega = _gossip_step(x, tail, head, gamma)
        trace.steps.append(TraceStep(k + 1, tail, head, gamma, float(omega), tuple(float(v) for v in x)))
    return trace


def default_rppsc_steps(n: int, epsilon: float = 0.01) -> int:
    return max(1, math.ceil(n * math.log(n / epsilon)))


def run_rppsc(g: Graph, p: GossipMatrix, beta, noise: NoiseModel, steps: int | None = None,
              seed=None) -> RunTrace:
    """Randomized PPSC gossip: uniform initiator, neighbour drawn from its row of P."""
    x = np.array(beta, dtype=float)
    n = g.n
    if x.shape != (n,):
        raise ValueError(f"beta must have length {n}")
    steps = default_rppsc_steps(n) if steps is None else int(steps)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    cum = np.cumsum(p.P, axis=1)
    cum[:, -1] = 1.0
    rng = make_rng(seed)
    trace = RunTrace("rppsc", seed, tuple(float(v) for v in x))
    for k in range(steps):
        i = int(rng.integers(n))
        j = int(np.searchsorted(cum[i], rng.random(), side="right"))
        gamma = sample_noise(noise, rng)
        omega = _gossip_step(x, i + 1, j + 1, gamma)
        trace.steps.append(TraceStep(k + 1, i + 1, j + 1, gamma, float(omega), tuple(float(v) for v in x)))
    return trace


# -- vectorised batches for Monte Carlo ---------------------------------------

def dppsc_batch(t: OrientedTree, beta, noise: NoiseModel, runs: int,
                rng: np.random.Generator) -> np.ndarray:
    """Final states of ``runs`` independent D-PPSC executions, shape (runs, n)."""
    x = np.tile(np.asarray(beta, dtype=float), (runs, 1))
    for tail, head in t.directed_edges:
        gamma = noise.sample(rng, runs)
        omega = x[:, tail - 1] - gamma
        x[:, tail - 1] = gamma
        x[:, head - 1] += omega
    return x


def rppsc_batch(p: GossipMatrix, x0, noise: NoiseModel | None, steps: int, runs: int,
                rng: np.random.Generator) -> np.ndarray:
    """States after ``steps`` randomized steps for ``runs`` independent runs."""
    n = p.P.shape[0]
    cum = np.cumsum(p.P, axis=1)
    cum[:, -1] = 1.0
    x = np.tile(np.asarray(x0, dtype=float), (runs, 1))
    rows = np.arange(runs)
    for _ in range(steps):
        i, j = sample_interactions(cum, runs, rng)
        gamma = noise.sample(rng, runs) if noise is not None else np.zeros(runs)
        omega = x[rows, i] - gamma
        x[rows, i] = gamma
        x[rows, j] += omega
    return x


def sample_interactions(cum: np.ndarray, runs: int, rng: np.random.Generator):
    """Initiator and neighbour indices (0-based) for one step of ``runs`` runs."""
    n = cum.shape[0]
    i = rng.integers(n, size=runs)
    u = rng.random(runs)
    j = (u[:, None] >= cum[i]).sum(axis=1)
    return i, np.minimum(j, n - 1)

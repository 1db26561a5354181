"""Exact symbolic execution of the PPSC gossip recursion.

Each node state is tracked as an integer combination of the inputs
``b_j`` and the injected noises ``g_s``::

    x_i(t) = sum_j c_ij(t) b_j + sum_s d_is(t) g_s

All arithmetic is integer; nothing in this module touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .netgraph import Edge, Graph, OrientedTree, directed_path, undirected_path
from .numerics import exact_rank


class SymbolicError(RuntimeError):
    """Internal-consistency failure; indicates a bug, never bad input."""


class PredicateDomainError(ValueError):
    pass


@dataclass
class SymbolicState:
    n: int
    beta_coeff: np.ndarray
    noise_coeff: np.ndarray
    t: int
    edges: tuple[Edge, ...]

    @property
    def total_steps(self) -> int:
        return self.noise_coeff.shape[1]

    def row(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        return self.beta_coeff[node - 1], self.noise_coeff[node - 1]

    def copy(self) -> "SymbolicState":
        return SymbolicState(self.n, self.beta_coeff.copy(), self.noise_coeff.copy(), self.t, self.edges)

    def format(self) -> str:
        return "\n".join(format_row(i, *self.row(i)) for i in range(1, self.n + 1))


@dataclass(frozen=True)
class MechanismMatrices:
    """``beta_sharp = C @ beta + D @ gamma``."""

    C: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class GraphicalModel:
    sigma2: float
    laplacian: np.ndarray
    edge_set: frozenset[Edge]

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma2 * self.laplacian

    def graph(self) -> Graph:
        return Graph(self.laplacian.shape[0], self.edge_set)

    def max_degree(self) -> int:
        return int(np.max(np.diag(self.laplacian)))


def format_row(node: int, beta: np.ndarray, noise: np.ndarray) -> str:
    """Render ``x4 = b2+b3+b4+b5 -g1 -g2 -g4`` style debug lines."""
    terms = []
    for j in np.flatnonzero(beta):
        c = int(beta[j])
        terms.append(f"b{j + 1}" if c == 1 else f"{c}*b{j + 1}")
    text = "+".join(terms)
    for s in np.flatnonzero(noise):
        d = int(noise[s])
        mag = "" if abs(d) == 1 else f"{abs(d)}*"
        sign = "-" if d < 0 else "+"
        piece = f"{sign}{mag}g{s + 1}"
        if not text:
            text = piece.lstrip("+")
        else:
            text += f" {piece}"
    return f"x{node} = {text or '0'}"


def _edges_of(t: OrientedTree | Sequence[Edge]) -> tuple[Edge, ...]:
    if isinstance(t, OrientedTree):
        return t.directed_edges
    return tuple((int(a), int(b)) for a, b in t)


def run_symbolic(t: OrientedTree | Sequence[Edge], n: int | None = None,
                 on_step: Callable[[SymbolicState], None] | None = None) -> SymbolicState:
    """Execute the gossip recursion symbolically over a directed edge sequence.

    ``t`` is normally an OrientedTree; any sequence of ``(tail, head)`` pairs
    is also accepted (``n`` is then required), e.g. a realized randomized run.
    ``on_step`` sees the state after every step.
    """
    edges = _edges_of(t)
    if isinstance(t, OrientedTree):
        n = t.n
    elif n is None:
        raise ValueError("n is required for a bare edge sequence")
    steps = len(edges)
    beta = np.eye(n, dtype=np.int64)
    noise = np.zeros((n, steps), dtype=np.int64)
    state = SymbolicState(n, beta, noise, 0, edges)
    for k, (tail, head) in enumerate(edges):
        a, b = tail - 1, head - 1
        beta[b] += beta[a]
        noise[b] += noise[a]
        beta[a] = 0
        noise[a] = 0
        noise[a, k] = 1
        noise[b, k] -= 1
        state.t = k + 1
        if on_step is not None:
            on_step(state)
    return state


def check_state_invariants(state: SymbolicState, tree_run: bool = True) -> None:
    """Raise SymbolicError if the per-step conservation invariants fail."""
    if not np.all(state.beta_coeff.sum(axis=0) == 1):
        raise SymbolicError("a beta symbol is not held by exactly one node")
    if not (np.all((state.beta_coeff == 0) | (state.beta_coeff == 1))):
        raise SymbolicError("beta coefficient outside {0,1}")
    injected = state.noise_coeff[:, : state.t]
    if np.any(state.noise_coeff[:, state.t:]):
        raise SymbolicError("noise symbol present before injection")
    if not np.all(injected.sum(axis=0) == 0):
        raise SymbolicError("noise column sums are not zero")
    if tree_run:
        pos = (injected == 1).sum(axis=0)
        neg = (injected == -1).sum(axis=0)
        if not (np.all(pos == 1) and np.all(neg == 1)):
            raise SymbolicError("noise symbol not held as exactly one +1 and one -1")


def extract_matrices(state: SymbolicState) -> MechanismMatrices:
    if state.t != state.total_steps:
        raise ValueError("symbolic run has not finished")
    return MechanismMatrices(state.beta_coeff.copy(), state.noise_coeff.copy())


def product_form_matrices(edges: Sequence[Edge], n: int) -> MechanismMatrices:
    """C and D built from the step matrices ``A_k = Phi_k + I`` and vectors ``v_k``.

    Independent of :func:`run_symbolic`; used to cross-check it.
    """
    steps = len(edges)
    a_mats = []
    v_vecs = []
    for tail, head in edges:
        phi = np.zeros((n, n), dtype=np.int64)
        phi[head - 1, tail - 1] = 1
        phi[tail - 1, tail - 1] = -1
        a_mats.append(phi + np.eye(n, dtype=np.int64))
        v = np.zeros(n, dtype=np.int64)
        v[tail - 1] = 1
        v[head - 1] = -1
        v_vecs.append(v)
    c = np.eye(n, dtype=np.int64)
    for a in a_mats:
        c = a @ c
    d = np.zeros((n, steps), dtype=np.int64)
    for k in range(steps):
        col = v_vecs[k]
        for a in a_mats[k + 1:]:
            col = a @ col
        d[:, k] = col
    return MechanismMatrices(c, d)


def dependence_oracle(state: SymbolicState, i: int, j: int) -> tuple[bool, int | None]:
    """Whether final states i and j share a noise symbol with opposite signs.

    Returns ``(dependent, s)`` with ``s`` the 1-based index of the shared
    noise.  Raises SymbolicError if more than one such symbol exists.
    """
    if i == j:
        raise ValueError("need two distinct nodes")
    prod = state.noise_coeff[i - 1] * state.noise_coeff[j - 1]
    shared = np.flatnonzero(prod == -1)
    if shared.size > 1:
        raise SymbolicError(f"nodes {i},{j} share {shared.size} noise symbols")
    if np.any(prod == 1):
        raise SymbolicError(f"nodes {i},{j} hold the same noise sign")
    if shared.size == 0:
        return False, None
    return True, int(shared[0]) + 1


def _keeps_component(t: OrientedTree, node: int, arrive: int | None, leave: int | None,
                     exclude: Iterable[Edge]) -> bool:
    """No out-edge of ``node`` (other than ``exclude``) fires while it holds a component.

    The component is held from step ``arrive`` (exclusive) until step
    ``leave`` (exclusive); ``None`` means unbounded on that side.
    """
    skip = set(exclude)
    for e in t.out_edges(node):
        if e in skip:
            continue
        k = t.position(*e)
        after_arrival = arrive is None or k > arrive
        before_leave = leave is None or k < leave
        if after_arrival and before_leave:
            return False
    return True


def _chain_increasing(positions: list[int]) -> bool:
    return all(a < b for a, b in zip(positions, positions[1:]))


def _transfer_ok(t: OrientedTree, chain: list[int], start: int) -> bool:
    """A component injected at step ``start`` at ``chain[0]`` reaches ``chain[-1]``.

    ``chain`` is a directed path ``c_0 -> c_1 -> ... -> c_m``; the component
    sits in ``c_0`` from step ``start`` onwards.
    """
    pos = [t.position(a, b) for a, b in zip(chain, chain[1:])]
    if any(p is None for p in pos):
        return False
    if not _chain_increasing([start] + pos):
        return False
    for b in range(len(chain)):
        node = chain[b]
        arrive = start if b == 0 else pos[b - 1]
        leave = pos[b] if b < len(pos) else None
        exclude = [(node, chain[b + 1])] if b < len(pos) else []
        if not _keeps_component(t, node, arrive, leave, exclude):
            return False
    return True


def undirected_dependence_predicate(t: OrientedTree, i: int, j: int) -> bool:
    """Dependence of final states i, j when no directed path joins them.

    Searches for a pivot ``0 < p < l`` on the tree path whose two path
    out-edges start directed chains towards both endpoints, with every edge
    on each chain selected in order and no off-path out-edge stealing the
    shared noise while it travels.
    """
    if directed_path(t, i, j) is not None or directed_path(t, j, i) is not None:
        raise PredicateDomainError(f"a directed path joins {i} and {j}; use directed_dependence_predicate")
    path = undirected_path(t, i, j)
    l = len(path) - 1
    for p in range(1, l):
        pivot = path[p]
        left = path[p::-1]        # i_p, i_{p-1}, ..., i_0
        right = path[p:]          # i_p, i_{p+1}, ..., i_l
        e_left = t.position(pivot, path[p - 1])
        e_right = t.position(pivot, path[p + 1])
        if e_left is None or e_right is None:
            continue
        first, second = sorted((e_left, e_right))
        # pivot holds the shared noise between its two path out-edges
        if not _keeps_component(t, pivot, first, second,
                                [(pivot, path[p - 1]), (pivot, path[p + 1])]):
            continue
        # each neighbour receives its share of the noise at the pivot's edge
        if _transfer_ok(t, left[1:], e_left) and _transfer_ok(t, right[1:], e_right):
            return True
    return False


def directed_dependence_predicate(t: OrientedTree, i: int, j: int) -> bool:
    """Dependence of final states i, j joined by a directed tree path.

    The path may run either way; dependence is symmetric.
    """
    path = directed_path(t, i, j) or directed_path(t, j, i)
    if path is None:
        raise PredicateDomainError(f"no directed path joins {i} and {j}")
    first = t.position(path[0], path[1])
    # source keeps +g after its path out-edge: no later out-edge
    if not _keeps_component(t, path[0], first, None, [(path[0], path[1])]):
        return False
    return _transfer_ok(t, path[1:], first)


def dependence_predicate(t: OrientedTree, i: int, j: int) -> bool:
    if directed_path(t, i, j) is not None or directed_path(t, j, i) is not None:
        return directed_dependence_predicate(t, i, j)
    return undirected_dependence_predicate(t, i, j)


def graphical_model(state: SymbolicState, sigma2: float = 1.0) -> GraphicalModel:
    """Dependency graph of the final states; ``Sigma / sigma2`` is ``D D^T``."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if state.t != state.total_steps:
        raise ValueError("symbolic run has not finished")
    d = state.noise_coeff
    lap = d @ d.T
    n = state.n
    edges = frozenset((a + 1, b + 1) for a in range(n) for b in range(a + 1, n) if lap[a, b] != 0)
    gm = GraphicalModel(float(sigma2), lap, edges)
    problems = laplacian_tree_violations(lap)
    if problems:
        raise SymbolicError("graphical model is not a tree Laplacian: " + "; ".join(problems))
    return gm


def laplacian_tree_violations(lap: np.ndarray) -> list[str]:
    """Exact checks that ``lap`` is the Laplacian of a spanning tree."""
    lap = np.asarray(lap)
    n = lap.shape[0]
    problems = []
    if not np.array_equal(lap, lap.T):
        problems.append("not symmetric")
    if np.any(lap.sum(axis=1) != 0):
        problems.append("row sums not zero")
    off = lap[~np.eye(n, dtype=bool)]
    if not np.all((off == 0) | (off == -1)):
        problems.append("off-diagonal outside {0,-1}")
    edges = [(a + 1, b + 1) for a in range(n) for b in range(a + 1, n) if lap[a, b] != 0]
    if len(edges) != n - 1:
        problems.append(f"{len(edges)} edges, expected {n - 1}")
    try:
        if Graph(n, edges).unreachable_from(1):
            problems.append("not connected")
    except ValueError as exc:
        problems.append(str(exc))
    return problems


def matrix_violations(m: MechanismMatrices, tree_run: bool = True) -> list[str]:
    """Structural facts every D-PPSC mechanism satisfies; empty list if all hold."""
    c = np.asarray(m.C)
    d = np.asarray(m.D)
    n = c.shape[0]
    problems = []
    if not np.all(c.sum(axis=0) == 1):
        problems.append("column sums of C are not one")
    if np.any(d.sum(axis=0) != 0):
        problems.append("column sums of D are not zero")
    if exact_rank(c) >= n:
        problems.append("C has full rank")
    if tree_run:
        if d.shape[1] != n - 1 or exact_rank(d) != d.shape[1]:
            problems.append("D lacks full column rank")
        problems += ["D D^T " + p for p in laplacian_tree_violations(d @ d.T)]
    return problems

"""Undirected graphs, oriented spanning trees and independent-set partitions.

Nodes are labelled ``1..n`` throughout, both in memory and in graph files.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    def __init__(self, node: int):
        super().__init__(f"graph is disconnected: node {node} is unreachable")
        self.node = node


def _key(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``1..n``."""

    n: int
    edges: frozenset[Edge]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        if n < 1:
            raise GraphError(f"node count must be positive, got {n}")
        normalized = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            for v in (i, j):
                if not 1 <= v <= n:
                    raise GraphError(f"node {v} outside 1..{n}")
            k = _key(i, j)
            if k in normalized:
                raise GraphError(f"duplicate edge {{{i},{j}}}")
            normalized.add(k)
        adj: list[list[int]] = [[] for _ in range(n + 1)]
        for i, j in normalized:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(normalized))
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def has_edge(self, i: int, j: int) -> bool:
        return _key(i, j) in self.edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def unreachable_from(self, root: int = 1) -> list[int]:
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return [v for v in self.nodes if v not in seen]

    def is_connected(self) -> bool:
        return not self.unreachable_from(1)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = 1.0
        return a


@dataclass(frozen=True)
class OrientedTree:
    """Spanning tree of ``base`` with oriented edges in a total selection order.

    ``directed_edges[k]`` is the edge selected at step ``k + 1`` as a
    ``(tail, head)`` pair.
    """

    base: Graph
    directed_edges: tuple[Edge, ...]

    def __post_init__(self):
        n = self.base.n
        edges = tuple((int(t), int(h)) for t, h in self.directed_edges)
        object.__setattr__(self, "directed_edges", edges)
        if len(edges) != n - 1:
            raise GraphError(f"oriented tree needs {n - 1} edges, got {len(edges)}")
        seen = set()
        for t, h in edges:
            if not self.base.has_edge(t, h):
                raise GraphError(f"edge ({t},{h}) is not in the base graph")
            k = _key(t, h)
            if k in seen:
                raise GraphError(f"edge {{{t},{h}}} appears twice")
            seen.add(k)
        if Graph(n, seen).unreachable_from(1):
            raise GraphError("directed edges do not span the base graph")

    @property
    def n(self) -> int:
        return self.base.n

    def tree_graph(self) -> Graph:
        return Graph(self.n, self.directed_edges)

    def position(self, tail: int, head: int) -> int | None:
        """1-based selection index of the directed edge, or None if absent."""
        return self._positions.get((tail, head))

    @property
    def _positions(self) -> dict[Edge, int]:
        cache = self.__dict__.get("_pos_cache")
        if cache is None:
            cache = {e: k + 1 for k, e in enumerate(self.directed_edges)}
            object.__setattr__(self, "_pos_cache", cache)
        return cache

    def out_edges(self, node: int) -> list[Edge]:
        return [e for e in self.directed_edges if e[0] == node]

    def with_order(self, edges: Sequence[Edge]) -> "OrientedTree":
        return OrientedTree(self.base, tuple(edges))


def spanning_tree(g: Graph, seed=None) -> OrientedTree:
    """Random oriented spanning tree of a connected graph.

    A DFS over seed-shuffled adjacency picks the tree; each edge gets an
    independent fair-coin orientation and the selection order is a uniform
    shuffle.
    """
    rng = np.random.default_rng(seed)
    missing = g.unreachable_from(1)
    if missing:
        raise DisconnectedGraphError(missing[0])
    if g.n == 1:
        return OrientedTree(g, ())
    root = int(rng.integers(1, g.n + 1))
    visited = {root}
    stack = [root]
    tree_edges: list[Edge] = []
    while stack:
        u = stack[-1]
        nbrs = [w for w in g.neighbors(u) if w not in visited]
        if not nbrs:
            stack.pop()
            continue
        w = nbrs[int(rng.integers(len(nbrs)))]
        visited.add(w)
        tree_edges.append((u, w))
        stack.append(w)
    oriented = [(u, w) if rng.random() < 0.5 else (w, u) for u, w in tree_edges]
    order = rng.permutation(len(oriented))
    return OrientedTree(g, tuple(oriented[k] for k in order))


def undirected_path(t: OrientedTree, i: int, j: int) -> list[int]:
    """Unique tree path ``i = i_0, ..., i_l = j``."""
    if i == j:
        raise GraphError("path endpoints must differ")
    tree = t.tree_graph()
    parent = {i: 0}
    queue = deque([i])
    while queue:
        u = queue.popleft()
        if u == j:
            break
        for w in tree.neighbors(u):
            if w not in parent:
                parent[w] = u
                queue.append(w)
    path = [j]
    while path[-1] != i:
        path.append(parent[path[-1]])
    return path[::-1]


def directed_path(t: OrientedTree, i: int, j: int) -> list[int] | None:
    """Tree path from i to j if every edge on it points from i towards j."""
    path = undirected_path(t, i, j)
    if all(t.position(a, b) is not None for a, b in zip(path, path[1:])):
        return path
    return None


@dataclass(frozen=True)
class IndependentPartition:
    blocks: tuple[frozenset[int], ...]
    representatives: tuple[int, ...]

    @property
    def kappa(self) -> int:
        return len(self.blocks)

    def validate(self, g: Graph) -> None:
        covered: set[int] = set()
        for block, rep in zip(self.blocks, self.representatives):
            if rep not in block:
                raise GraphError(f"representative {rep} not in its block")
            if covered & block:
                raise GraphError("blocks overlap")
            covered |= block
            for a in block:
                for b in block:
                    if a < b and g.has_edge(a, b):
                        raise GraphError(f"block contains adjacent nodes {a},{b}")
        if covered != set(g.nodes):
            raise GraphError("blocks do not cover the node set")


def greedy_independent_partition(g: Graph) -> IndependentPartition:
    """Greedy colouring in ascending node order; colour classes are the blocks."""
    if g.n < 2:
        raise GraphError("need at least two nodes")
    colour: dict[int, int] = {}
    for v in g.nodes:
        used = {colour[w] for w in g.neighbors(v) if w in colour}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    kappa = max(colour.values()) + 1
    blocks = tuple(frozenset(v for v in g.nodes if colour[v] == c) for c in range(kappa))
    return IndependentPartition(blocks, tuple(min(b) for b in blocks))


def max_degree(g: Graph) -> int:
    return max((g.degree(i) for i in g.nodes), default=0)


# -- constructors -----------------------------------------------------------

def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(1, n)])


def ring_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError("ring needs at least 3 nodes")
    return Graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def star_graph(n: int, hub: int = 1) -> Graph:
    return Graph(n, [(hub, v) for v in range(1, n + 1) if v != hub])


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi G(n, p)."""
    edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < p]
    return Graph(n, edges)


def random_connected_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p) overlaid on a uniformly random labelled tree, so always connected."""
    edges = set(random_tree(n, rng).edges)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p:
                edges.add((i, j))
    return Graph(n, edges)


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    if n <= 2:
        return path_graph(n)
    return prufer_to_tree([int(x) for x in rng.integers(1, n + 1, size=n - 2)], n)


def prufer_to_tree(seq: Sequence[int], n: int) -> Graph:
    degree = [1] * (n + 1)
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = next(v for v in range(1, n + 1) if degree[v] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, w = (v for v in range(1, n + 1) if degree[v] == 1)
    edges.append((u, w))
    return Graph(n, edges)


def tree_canonical_form(g: Graph) -> str:
    """Isomorphism-invariant string of a tree (AHU encoding rooted at its centre)."""
    if len(g.edges) != g.n - 1 or not g.is_connected():
        raise GraphError("canonical form is defined for trees only")
    if g.n == 1:
        return "()"
    deg = {v: g.degree(v) for v in g.nodes}
    layer = [v for v in g.nodes if deg[v] <= 1]
    left = g.n
    while left > 2:
        left -= len(layer)
        nxt = []
        for v in layer:
            for w in g.neighbors(v):
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt

    def encode(v: int, parent: int | None) -> str:
        return "(" + "".join(sorted(encode(w, v) for w in g.neighbors(v) if w != parent)) + ")"

    return min(encode(c, None) for c in layer)


def nonisomorphic_trees(n: int) -> list[Graph]:
    """One labelled representative per isomorphism class of trees on ``n`` nodes."""
    if n <= 2:
        return [path_graph(n)]
    seen: dict[str, Graph] = {}
    for seq in itertools.product(range(1, n + 1), repeat=n - 2):
        tree = prufer_to_tree(seq, n)
        seen.setdefault(tree_canonical_form(tree), tree)
    return [seen[k] for k in sorted(seen)]


# -- file format --------------------------------------------------------------

def parse_graph(text: str, source: str = "<string>") -> Graph:
    """Parse ``n`` followed by one ``i j`` edge per line; ``#`` starts a comment."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            values = [int(x) for x in parts]
        except ValueError:
            raise GraphError(f"{source}:{lineno}: expected integers, got {line!r}") from None
        if n is None:
            if len(values) != 1:
                raise GraphError(f"{source}:{lineno}: first line must be the node count")
            n = values[0]
        else:
            if len(values) != 2:
                raise GraphError(f"{source}:{lineno}: expected 'i j', got {line!r}")
            edges.append(values)
    if n is None:
        raise GraphError(f"{source}: empty graph file")
    try:
        return Graph(n, edges)
    except GraphError as exc:
        raise GraphError(f"{source}: {exc}") from None


def load_graph(path: str | Path) -> Graph:
    path = Path(path)
    return parse_graph(path.read_text(), str(path))


def format_graph(g: Graph) -> str:
    lines = [str(g.n)] + [f"{i} {j}" for i, j in g.sorted_edges()]
    return "\n".join(lines) + "\n"

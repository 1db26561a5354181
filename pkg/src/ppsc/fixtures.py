"""Reference instances: a five-node network, its ordered spanning tree, and known outputs."""

from __future__ import annotations

import numpy as np

from .netgraph import Graph, OrientedTree

EXAMPLE_EDGES = ((1, 2), (2, 3), (2, 5), (3, 4), (1, 5), (4, 5))
EXAMPLE_ORDER = ((5, 2), (2, 3), (2, 1), (3, 4))

EXAMPLE_OUTPUT = (
    "x1 = b1 +g2 -g3",
    "x2 = g3",
    "x3 = g4",
    "x4 = b2+b3+b4+b5 -g1 -g2 -g4",
    "x5 = g1",
)

# expected noise-covariance profile divided by the noise variance
EXAMPLE_LAPLACIAN = np.array([
    [2, -1, 0, -1, 0],
    [-1, 1, 0, 0, 0],
    [0, 0, 1, -1, 0],
    [-1, 0, -1, 3, -1],
    [0, 0, 0, -1, 1],
])


def example_graph() -> Graph:
    return Graph(5, EXAMPLE_EDGES)


def example_tree() -> OrientedTree:
    return OrientedTree(example_graph(), EXAMPLE_ORDER)

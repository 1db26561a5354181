import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppsc.netgraph import (
    DisconnectedGraphError,
    Graph,
    GraphError,
    IndependentPartition,
    OrientedTree,
    complete_graph,
    directed_path,
    format_graph,
    greedy_independent_partition,
    load_graph,
    nonisomorphic_trees,
    parse_graph,
    path_graph,
    prufer_to_tree,
    random_connected_graph,
    ring_graph,
    spanning_tree,
    star_graph,
    tree_canonical_form,
    undirected_path,
)


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError, match="self-loop"):
        Graph(3, [(1, 1)])
    with pytest.raises(GraphError, match="outside"):
        Graph(3, [(1, 4)])
    with pytest.raises(GraphError, match="duplicate"):
        Graph(3, [(1, 2), (2, 1)])


def test_basic_queries(example_graph):
    g = example_graph
    assert g.neighbors(2) == (1, 3, 5)
    assert g.degree(5) == 3
    assert g.has_edge(5, 1) and not g.has_edge(1, 3)
    assert g.is_connected()
    assert Graph(4, [(1, 2), (3, 4)]).unreachable_from(1) == [3, 4]


def test_parse_round_trip(tmp_path, example_graph):
    path = tmp_path / "g.txt"
    path.write_text("# five nodes\n5\n" + format_graph(example_graph).split("\n", 1)[1])
    assert load_graph(path) == example_graph


def test_parse_errors_carry_line_numbers():
    with pytest.raises(GraphError, match=r"<string>:3: expected 'i j'"):
        parse_graph("3\n1 2\n2 3 4\n")
    with pytest.raises(GraphError, match=r"<string>:2: expected integers"):
        parse_graph("3\n1 x\n")
    with pytest.raises(GraphError, match="empty"):
        parse_graph("# nothing\n")


def test_oriented_tree_validation(example_graph):
    with pytest.raises(GraphError, match="needs 4 edges"):
        OrientedTree(example_graph, ((5, 2),))
    with pytest.raises(GraphError, match="not in the base graph"):
        OrientedTree(example_graph, ((1, 3), (2, 3), (2, 1), (3, 4)))
    with pytest.raises(GraphError, match="twice"):
        OrientedTree(example_graph, ((5, 2), (2, 5), (2, 1), (3, 4)))


def test_example_paths(example_tree):
    assert example_tree.position(2, 1) == 3
    assert example_tree.position(1, 2) is None
    assert undirected_path(example_tree, 1, 4) == [1, 2, 3, 4]
    assert directed_path(example_tree, 2, 4) == [2, 3, 4]
    assert directed_path(example_tree, 1, 4) is None
    assert directed_path(example_tree, 5, 4) == [5, 2, 3, 4]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 15), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
def test_spanning_tree_is_spanning(n, p, seed):
    g = random_connected_graph(n, p, np.random.default_rng(seed))
    t = spanning_tree(g, seed)
    assert len(t.directed_edges) == n - 1
    tree = t.tree_graph()
    assert tree.is_connected() and len(tree.edges) == n - 1
    assert all(g.has_edge(a, b) for a, b in t.directed_edges)


def test_spanning_tree_rejects_disconnected():
    with pytest.raises(DisconnectedGraphError):
        spanning_tree(Graph(4, [(1, 2), (3, 4)]), 0)


def test_spanning_tree_is_seed_deterministic(example_graph):
    assert spanning_tree(example_graph, 7) == spanning_tree(example_graph, 7)


def test_constructors():
    assert len(ring_graph(6).edges) == 6
    assert len(complete_graph(5).edges) == 10
    assert star_graph(5).degree(1) == 4
    assert len(path_graph(4).edges) == 3
    with pytest.raises(GraphError):
        ring_graph(2)


def test_prufer_round_trip_covers_all_labelled_trees():
    n = 5
    trees = {prufer_to_tree(seq, n).edges for seq in itertools.product(range(1, n + 1), repeat=n - 2)}
    assert len(trees) == n ** (n - 2)


@pytest.mark.parametrize("n", range(2, 8))
def test_nonisomorphic_tree_counts_match_networkx(n):
    ours = nonisomorphic_trees(n)
    ref = list(nx.nonisomorphic_trees(n)) if n > 1 else [nx.empty_graph(1)]
    assert len(ours) == len(ref)
    for a, b in itertools.combinations(ours, 2):
        ga, gb = nx.Graph(list(a.edges)), nx.Graph(list(b.edges))
        assert not nx.is_isomorphic(ga, gb)


def test_canonical_form_is_label_invariant():
    rng = np.random.default_rng(3)
    tree = prufer_to_tree([3, 3, 5, 1, 6], 7)
    perm = rng.permutation(7) + 1
    relabelled = Graph(7, [(perm[a - 1], perm[b - 1]) for a, b in tree.edges])
    assert tree_canonical_form(tree) == tree_canonical_form(relabelled)


def test_independent_partition(example_graph):
    part = greedy_independent_partition(example_graph)
    part.validate(example_graph)
    assert sorted(sorted(b) for b in part.blocks) == [[1, 3], [2, 4], [5]]
    assert part.kappa == 3
    with pytest.raises(GraphError):
        IndependentPartition((frozenset({1, 2}), frozenset({3, 4, 5})), (1, 3)).validate(example_graph)

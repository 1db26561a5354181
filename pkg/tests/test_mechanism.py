import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppsc.mechanism import (
    GossipMatrix,
    NoiseModel,
    default_rppsc_steps,
    derive_seed,
    dppsc_batch,
    make_rng,
    random_gossip_matrix,
    run_dppsc,
    run_rppsc,
    sample_interactions,
    uniform_gossip_matrix,
)
from ppsc.netgraph import Graph, GraphError, OrientedTree, random_connected_graph, ring_graph, spanning_tree
from ppsc.symbolic import extract_matrices, run_symbolic


def test_pinned_example_run(example_tree):
    beta = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    g = np.array([0.1, 0.2, 0.3, 0.4])
    trace = run_dppsc(example_tree, beta, NoiseModel(), gammas=g)
    expected = [beta[0] + g[1] - g[2], g[2], g[3], beta[1:].sum() - g[0] - g[1] - g[3], g[0]]
    assert np.allclose(trace.final, expected, rtol=0, atol=1e-12)


def test_zero_noise_gives_c_beta(example_tree):
    beta = np.array([1.5, -2.0, 3.0, 0.25, 5.0])
    m = extract_matrices(run_symbolic(example_tree))
    trace = run_dppsc(example_tree, beta, NoiseModel(), gammas=[0.0] * 4)
    assert np.array_equal(trace.final, m.C @ beta)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1), st.sampled_from(["gaussian", "laplace", "uniform"]))
def test_dppsc_matches_matrices_and_conserves(n, seed, family):
    rng = make_rng(seed)
    g = random_connected_graph(n, 0.3, rng)
    t = spanning_tree(g, seed)
    beta = rng.normal(0, 10, n)
    trace = run_dppsc(t, beta, NoiseModel(family, 1.0, 4.0), seed=seed)
    m = extract_matrices(run_symbolic(t))
    assert np.abs(trace.final - (m.C @ beta + m.D @ trace.gammas)).max() <= 1e-10 * (1 + np.abs(beta).max())
    prev = beta.sum()
    for s in trace.steps:
        assert abs(sum(s.state) - prev) <= 1e-9 * (1 + abs(beta.sum()))
        assert g.has_edge(s.tail, s.head)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_rppsc_replays_through_symbolic(n, seed):
    rng = make_rng(seed)
    g = random_connected_graph(n, 0.4, rng)
    p = random_gossip_matrix(g, rng)
    beta = rng.normal(0, 5, n)
    trace = run_rppsc(g, p, beta, NoiseModel("laplace", 0.0, 2.0), steps=30, seed=seed)
    state = run_symbolic(trace.edges, n=n)
    replay = state.beta_coeff @ beta + state.noise_coeff @ trace.gammas
    assert np.abs(replay - trace.final).max() <= 1e-10 * (1 + np.abs(beta).max())
    assert all(g.has_edge(a, b) for a, b in trace.edges)


def test_packet_is_tail_minus_noise(example_tree):
    trace = run_dppsc(example_tree, [1.0, 2.0, 3.0, 4.0, 5.0], NoiseModel(), seed=4)
    prev = np.array(trace.initial)
    for s in trace.steps:
        assert s.omega == pytest.approx(prev[s.tail - 1] - s.gamma)
        prev = np.array(s.state)


def test_two_nodes_one_step_is_symmetric():
    g = Graph(2, [(1, 2)])
    p = uniform_gossip_matrix(g)
    for seed in range(10):
        trace = run_rppsc(g, p, [3.0, 7.0], NoiseModel(), steps=1, seed=seed)
        s = trace.steps[0]
        t = OrientedTree(g, ((s.tail, s.head),))
        ref = run_dppsc(t, [3.0, 7.0], NoiseModel(), gammas=[s.gamma])
        assert np.array_equal(trace.final, ref.final)


def test_edge_frequencies_on_ring():
    g = ring_graph(3)
    rng = make_rng(11)
    p = random_gossip_matrix(g, rng)
    cum = np.cumsum(p.P, axis=1)
    cum[:, -1] = 1.0
    runs = 10_000
    i, j = sample_interactions(cum, runs, rng)
    for a in range(3):
        for b in range(a + 1, 3):
            freq = np.mean(((i == a) & (j == b)) | ((i == b) & (j == a)))
            expect = (p.P[a, b] + p.P[b, a]) / 3
            assert abs(freq - expect) <= 3 * math.sqrt(expect * (1 - expect) / runs)


def test_noise_moments():
    rng = make_rng(5)
    lap = NoiseModel.laplace(1.0).sample(rng, 10**6)
    assert abs(lap.var() - 2.0) <= 0.05
    gauss = NoiseModel("gaussian", 5.0, 1.0).sample(rng, 10**6)
    assert abs(gauss.mean() - 5.0) <= 0.01
    uni = NoiseModel("uniform", -1.0, 3.0).sample(rng, 10**6)
    assert abs(uni.var() - 3.0) <= 0.05 and abs(uni.mean() + 1.0) <= 0.01


@pytest.mark.parametrize("variance", [0.0, -1.0, math.inf])
def test_invalid_variance_rejected(variance):
    with pytest.raises(ValueError):
        NoiseModel("gaussian", 0.0, variance)


def test_unknown_family_rejected():
    with pytest.raises(ValueError, match="unknown noise family"):
        NoiseModel("cauchy")


def test_gossip_matrix_validation(example_graph):
    a = example_graph.adjacency_matrix()
    with pytest.raises(GraphError, match="sum to one"):
        GossipMatrix(example_graph, a)
    bad = a / a.sum(axis=1, keepdims=True)
    bad[0, 0], bad[0, 1] = 0.5, 0.0
    with pytest.raises(GraphError):
        GossipMatrix(example_graph, bad)
    p = uniform_gossip_matrix(example_graph)
    assert np.allclose(p.P.sum(axis=1), 1.0) and np.all(np.diag(p.P) == 0)


def test_runs_are_seed_reproducible(example_graph):
    p = uniform_gossip_matrix(example_graph)
    a = run_rppsc(example_graph, p, np.arange(5.0), NoiseModel(), seed=derive_seed(1, 2))
    b = run_rppsc(example_graph, p, np.arange(5.0), NoiseModel(), seed=derive_seed(1, 2))
    c = run_rppsc(example_graph, p, np.arange(5.0), NoiseModel(), seed=derive_seed(1, 3))
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()


def test_default_steps_and_trace_redaction(example_graph):
    assert default_rppsc_steps(5) == math.ceil(5 * math.log(500))
    p = uniform_gossip_matrix(example_graph)
    trace = run_rppsc(example_graph, p, np.arange(5.0), NoiseModel(), seed=1)
    assert len(trace.steps) == default_rppsc_steps(5)
    full = trace.to_dict(graph_ref="g.txt")
    red = trace.to_dict(graph_ref="g.txt", redact=True)
    assert set(full["steps"][0]) == {"t", "tail", "head", "gamma", "omega", "state"}
    assert set(red["steps"][0]) == {"t", "tail", "head", "omega"}
    assert red["final"] == full["final"]


def test_batch_agrees_with_matrices(example_tree):
    m = extract_matrices(run_symbolic(example_tree))
    beta = np.arange(1.0, 6.0)
    x = dppsc_batch(example_tree, beta, NoiseModel("gaussian", 0.0, 1.0), 200, make_rng(2))
    assert np.allclose(x.sum(axis=1), beta.sum())
    # zero-weight rows of C carry pure noise
    assert np.allclose(x[:, 1].mean(), 0.0, atol=0.3)
    assert m.C[1].sum() == 0

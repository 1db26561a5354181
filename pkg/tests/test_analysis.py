import math

import numpy as np
import pytest

from ppsc import analysis
from ppsc.mechanism import NoiseModel, make_rng, random_gossip_matrix, rppsc_batch, uniform_gossip_matrix
from ppsc.netgraph import Graph, IndependentPartition, greedy_independent_partition, ring_graph, star_graph


def exact_q_t(p, t):
    """P(Q_t) by inclusion-exclusion over every node subset."""
    n = p.P.shape[0]
    total = np.zeros_like(np.asarray(t, dtype=float))
    for mask in range(1 << n):
        s = np.array([(mask >> k) & 1 for k in range(n)], dtype=bool)
        touch = (p.P[s].sum() + p.P[~s][:, s].sum()) / n
        total = total + (-1) ** s.sum() * max(1.0 - touch, 0.0) ** np.asarray(t, dtype=float)
    return total


def test_expected_dynamics_invariants():
    g = ring_graph(5)
    p = random_gossip_matrix(g, make_rng(1))
    dyn = analysis.expected_dynamics(p)
    assert np.allclose(np.ones(5) @ dyn.a_bar, np.ones(5))
    assert abs(dyn.v_bar.sum()) <= 1e-15
    assert np.all(dyn.q1 > 0) and dyn.q1.sum() == pytest.approx(1.0)
    assert np.allclose(p.P.T @ dyn.q1, dyn.q1)


def test_perron_vector_of_symmetric_walk():
    p = uniform_gossip_matrix(ring_graph(6))
    assert np.allclose(analysis.perron_vector(p), 1 / 6)


def test_mean_limit_without_noise_mean_is_perron_profile():
    g = ring_graph(5)
    p = random_gossip_matrix(g, make_rng(2))
    x0 = np.array([1.0, -3.0, 2.0, 0.5, 4.0])
    m = analysis.mean_limit(g, p, x0, 0.0)
    assert np.allclose(m, analysis.perron_vector(p) * x0.sum(), atol=1e-12)


def test_mean_limit_residual_and_sum():
    g = star_graph(6)
    p = random_gossip_matrix(g, make_rng(3))
    x0 = np.arange(6.0)
    m = analysis.mean_limit(g, p, x0, 1.7)
    dyn = analysis.expected_dynamics(p)
    assert np.abs((np.eye(6) - dyn.a_bar) @ m - 1.7 * dyn.v_bar).max() <= 1e-10
    assert m.sum() == pytest.approx(x0.sum(), abs=1e-12)


def test_mean_limit_matches_iterated_expectation():
    g = ring_graph(4)
    p = random_gossip_matrix(g, make_rng(4))
    dyn = analysis.expected_dynamics(p)
    x = np.array([1.0, 2.0, -1.0, 0.0])
    m = analysis.mean_limit(g, p, x, 2.0)
    for _ in range(5000):
        x = dyn.a_bar @ x + 2.0 * dyn.v_bar
    assert np.allclose(x, m, atol=1e-10)


def test_mc_mean_sum_constant_over_time():
    g = ring_graph(4)
    p = random_gossip_matrix(g, make_rng(5))
    x0 = np.array([1.0, 2.0, 3.0, 4.0])
    rng = make_rng(6)
    for steps in (1, 10, 50):
        x = rppsc_batch(p, x0, NoiseModel("gaussian", 2.0, 1.0), steps, 2000, rng)
        assert np.allclose(x.sum(axis=1), 10.0)


def test_mean_limit_rejects_disconnected():
    g = Graph(4, [(1, 2), (3, 4)])
    p = random_gossip_matrix(g, make_rng(0))
    with pytest.raises(ValueError):
        analysis.mean_limit(g, p, np.ones(4), 0.0)


def test_xi_vector(example_graph):
    p = uniform_gossip_matrix(example_graph)
    xi = analysis.xi_vector(p)
    assert np.all((xi > 0) & (xi <= 1))
    assert xi.sum() == pytest.approx(2.0)


def test_singleton_partition_reduces_to_union_bound(example_graph):
    p = uniform_gossip_matrix(example_graph)
    part = IndependentPartition(tuple(frozenset({v}) for v in range(1, 6)), tuple(range(1, 6)))
    ts = np.arange(1, 40)
    assert np.allclose(analysis.encryption_prob_lower_bound(example_graph, p, part, ts),
                       analysis.singleton_lower_bound(p, ts), atol=1e-14)


@pytest.mark.parametrize("graph", [ring_graph(6), star_graph(5), ring_graph(9)])
def test_bounds_bracket_exact_probability(graph):
    p = uniform_gossip_matrix(graph)
    ts = np.arange(1, 80)
    exact = exact_q_t(p, ts)
    lb = analysis.encryption_prob_lower_bound(graph, p, greedy_independent_partition(graph), ts)
    ub = analysis.encryption_prob_upper_bound(p, ts)
    assert np.all(lb <= exact + 1e-12)
    assert np.all(exact <= ub + 1e-12)
    assert np.all(analysis.singleton_lower_bound(p, ts) <= lb + 1e-12)


def test_partition_bound_nonpositive_before_any_step(example_graph):
    p = uniform_gossip_matrix(example_graph)
    part = greedy_independent_partition(example_graph)
    assert analysis.encryption_prob_lower_bound(example_graph, p, part, 1) <= 0.0


def test_block_cap():
    g = star_graph(18)
    p = uniform_gossip_matrix(g)
    part = greedy_independent_partition(g)
    with pytest.raises(ValueError, match="encryption_time_bounds"):
        analysis.encryption_prob_lower_bound(g, p, part, 5)


def test_encryption_time_bounds_algebra():
    g = ring_graph(10)
    p = uniform_gossip_matrix(g)
    lo, hi = analysis.encryption_time_bounds(g, p, 0.1)
    xi_m = analysis.xi_vector(p).min()
    assert hi - lo == pytest.approx(-math.log(10) / math.log(1 - xi_m))
    with pytest.raises(ValueError):
        analysis.encryption_time_bounds(g, p, 1.0)


def test_single_edge_degenerate_case():
    g = Graph(2, [(1, 2)])
    assert analysis.encryption_time_bounds(g, uniform_gossip_matrix(g), 0.01) == (1.0, 1.0)


def test_estimate_q_t_properties(example_graph):
    p = uniform_gossip_matrix(example_graph)
    st = analysis.estimate_q_t(example_graph, p, 120, 20_000, seed=3)
    assert np.all(np.diff(st.q_t) >= 0)
    assert st.q_t[0] == 0.0 and st.q_t[-1] == 1.0
    assert np.all((st.half_width > 0) & (st.half_width < 0.05))
    sd = np.sqrt(st.xi * (1 - st.xi) / st.runs)
    assert np.all(np.abs(st.xi_hat - st.xi) <= 3 * sd)
    again = analysis.estimate_q_t(example_graph, p, 120, 20_000, seed=3)
    assert np.array_equal(st.q_t, again.q_t)


def test_wilson_half_width_known_value():
    assert analysis.wilson_half_width(50, 100) == pytest.approx(0.09617, abs=1e-5)

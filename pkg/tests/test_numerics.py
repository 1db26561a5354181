import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppsc import numerics

seeds = st.integers(0, 2**32 - 1)


def _low_rank(seed, n, m, r):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, r)) @ rng.normal(size=(r, m))


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(1, 9), st.integers(1, 9), st.integers(0, 9))
def test_rank_and_kernel_of_low_rank_products(seed, n, m, r):
    r = min(r, n, m)
    a = _low_rank(seed, n, m, r)
    assert numerics.rank(a) == r
    k = numerics.kernel_basis(a)
    assert k.shape == (m, m - r)
    assert np.allclose(a @ k, 0, atol=1e-9 * max(1.0, np.abs(a).max()))
    assert np.allclose(k.T @ k, np.eye(m - r), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 7))
def test_exact_rank_agrees_on_integer_matrices(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.integers(-2, 3, size=(n, n + 1)) @ rng.integers(-1, 2, size=(n + 1, n))
    assert numerics.exact_rank(a) == numerics.rank(a)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 24))
def test_jacobi_matches_numpy_eigh(seed, n):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(n, n))
    s = b + b.T
    res = numerics.jacobi_eigh(s)
    assert np.allclose(res.eigenvalues, np.linalg.eigvalsh(s), atol=1e-10 * max(1, np.abs(s).max()))
    v = res.eigenvectors
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)
    assert np.abs(v @ np.diag(res.eigenvalues) @ v.T - s).max() <= 1e-9 * max(1.0, np.abs(s).max())


def test_jacobi_large_reconstruction():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(64, 64))
    s = b + b.T
    res = numerics.jacobi_eigh(s)
    v = res.eigenvectors
    assert np.abs(v @ np.diag(res.eigenvalues) @ v.T - s).max() <= 1e-9


def test_jacobi_rejects_nonsymmetric():
    with pytest.raises(numerics.NumericsError):
        numerics.jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_smallest_abs_eigenvalue():
    assert numerics.smallest_abs_eigenvalue(np.diag([2.0, -1.0, 3.0])) == pytest.approx(1.0)


def test_kernel_of_rank_one():
    k = numerics.kernel_basis(np.ones((2, 2)))
    assert k.shape == (2, 1)
    assert np.allclose(np.abs(k[:, 0]), [2 ** -0.5, 2 ** -0.5])
    assert k[0, 0] == pytest.approx(-k[1, 0])


def test_pinv_and_lstsq_minimum_norm():
    a = np.array([[1.0, 1.0]])
    x = numerics.lstsq(a, [2.0])
    assert np.allclose(x, [1.0, 1.0])
    assert np.allclose(numerics.pinv(a), np.linalg.pinv(a))


def test_solve_kkt_unique():
    sol = numerics.solve_kkt(np.eye(2), [[1.0, 1.0]], [0.0, 0.0], [2.0])
    assert sol.unique
    assert np.allclose(sol.solution, [1.0, 1.0])
    assert np.allclose(sol.multipliers, [-1.0])


def test_solve_kkt_singular_returns_min_norm():
    h = np.diag([1.0, 0.0, 0.0])
    a = np.array([[1.0, 1.0, 1.0]])
    sol = numerics.solve_kkt(h, a, [1.0, 0.0, 0.0], [3.0])
    assert not sol.unique
    # stationarity forces the multiplier to zero, hence x1 = 1 and x2 = x3 = 1
    assert np.allclose(sol.solution, [1.0, 1.0, 1.0])


def test_solve_kkt_inconsistent_raises():
    h = np.zeros((2, 2))
    a = np.array([[1.0, 1.0]])
    with pytest.raises(numerics.InconsistentSystemError):
        numerics.solve_kkt(h, a, [1.0, 0.0], [0.0])


def test_solve_kkt_badly_scaled_hessian_stays_unique():
    h = 1e12 * np.eye(4) + np.diag([1.0, 2.0, 3.0, 4.0])
    sol = numerics.solve_kkt(h, np.ones((1, 4)), h @ np.arange(4.0), [6.0])
    assert sol.unique
    assert np.allclose(sol.solution, np.arange(4.0), atol=1e-9)


def test_dimension_mismatch():
    with pytest.raises(numerics.NumericsError, match="dimensions"):
        numerics.solve_kkt(np.eye(2), [[1.0, 1.0, 1.0]], [0.0, 0.0], [1.0])

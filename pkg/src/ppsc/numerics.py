"""Dense linear-algebra kernel.

Every factorization used by the package goes through this module so that
rank and tolerance decisions are made in one place.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEFAULT_RTOL = 1e-9


class NumericsError(ValueError):
    pass


class InconsistentSystemError(NumericsError):
    pass


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class KktSolution:
    solution: np.ndarray
    multipliers: np.ndarray
    unique: bool
    residual: float


def as_matrix(m) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2:
        raise NumericsError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericsError("matrix has non-finite entries")
    return a


def _threshold(s: np.ndarray, shape: tuple[int, int], tol: float | None) -> float:
    smax = float(s[0]) if s.size else 0.0
    if tol is None:
        tol = DEFAULT_RTOL * max(shape)
    elif tol <= 0:
        raise NumericsError("tol must be positive")
    return tol * smax


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def rank(m, tol: float | None = None) -> int:
    """Numerical rank: count of singular values >= tol * sigma_max.

    The default relative tolerance is ``1e-9 * max(rows, cols)``.
    """
    a = as_matrix(m)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s >= _threshold(s, a.shape, tol)))


def kernel_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space."""
    a = as_matrix(m)
    cols = a.shape[1]
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(cols)
    r = int(np.sum(s >= _threshold(s, a.shape, tol)))
    return vt[r:].T.copy()


def exact_rank(m) -> int:
    """Rank of an integer (or rational) matrix by exact Gaussian elimination."""
    rows = [[Fraction(int(x)) if float(x).is_integer() else Fraction(x) for x in row]
            for row in np.atleast_2d(np.asarray(m)).tolist()]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for c in range(ncols):
        pivot = next((k for k in range(r, len(rows)) if rows[k][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pr = rows[r]
        for k in range(r + 1, len(rows)):
            f = rows[k][c] / pr[c]
            if f:
                rows[k] = [a - f * b for a, b in zip(rows[k], pr)]
        r += 1
        if r == len(rows):
            break
    return r


def is_symmetric(m, tol: float = 1e-12) -> bool:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return bool(np.max(np.abs(a - a.T), initial=0.0) <= tol * scale)


def jacobi_eigh(sym, tol: float = 1e-14, max_sweeps: int = 100) -> EigResult:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Eigenvalues are returned in ascending order with orthonormal eigenvector
    columns.
    """
    a = as_matrix(sym).copy()
    if not is_symmetric(a):
        raise NumericsError("matrix is not symmetric")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NumericsError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigResult(w[order], v[:, order])


def smallest_abs_eigenvalue(sym) -> float:
    """min_k |lambda_k| of a real symmetric matrix."""
    return float(np.min(np.abs(jacobi_eigh(sym).eigenvalues)))


def pinv(m, tol: float | None = None) -> np.ndarray:
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.shape[::-1])
    keep = s >= _threshold(s, a.shape, tol)
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def lstsq(m, b, tol: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution."""
    return pinv(m, tol) @ np.asarray(b, dtype=float)


def solve_kkt(h, a_eq, grad_rhs, eq_rhs, tol: float | None = None,
              residual_tol: float = 1e-8) -> KktSolution:
    """Solve the saddle-point system ``[h a_eq^T; a_eq 0] [x; lam] = [g; e]``.

    When the saddle matrix is rank deficient the minimum-norm solution is
    returned with ``unique=False``.  Raises InconsistentSystemError when the
    least-squares residual exceeds ``residual_tol * (1 + |rhs|)``.  The
    constraint block is rescaled to the norm of ``h`` so that rank decisions
    are not skewed by a badly scaled Hessian.
    """
    h = as_matrix(h)
    a_eq = as_matrix(a_eq)
    g = np.atleast_1d(np.asarray(grad_rhs, dtype=float))
    e = np.atleast_1d(np.asarray(eq_rhs, dtype=float))
    n, m = h.shape[0], a_eq.shape[0]
    if h.shape != (n, n) or a_eq.shape[1] != n or g.shape != (n,) or e.shape != (m,):
        raise NumericsError(
            f"inconsistent KKT dimensions: h{h.shape} a_eq{a_eq.shape} g{g.shape} e{e.shape}")
    h_norm = np.linalg.norm(h, 2)
    a_norm = np.linalg.norm(a_eq, 2) if m else 0.0
    c = h_norm / a_norm if h_norm > 0 and a_norm > 0 else 1.0
    k = saddle_matrix(h, c * a_eq)
    rhs = np.concatenate([g, c * e])
    unique = rank(k, tol) == n + m
    z = np.linalg.solve(k, rhs) if unique else lstsq(k, rhs, tol)
    res = float(np.linalg.norm(k @ z - rhs))
    if res > residual_tol * (1.0 + np.linalg.norm(rhs)) * max(1.0, np.linalg.norm(k, 2)):
        raise InconsistentSystemError(f"KKT system is inconsistent (residual {res:.3e})")
    return KktSolution(z[:n], c * z[n:], unique, res)


def saddle_matrix(h, a_eq) -> np.ndarray:
    h = as_matrix(h)
    a_eq = as_matrix(a_eq)
    m = a_eq.shape[0]
    return np.block([[h, a_eq.T], [a_eq, np.zeros((m, m))]])

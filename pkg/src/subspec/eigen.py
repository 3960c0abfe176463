"""Smallest eigenvalues of symmetric pencils ``K v = lam M v`` with diagonal M.

The pencil is reduced to the standard symmetric matrix
``B = M^-1/2 K M^-1/2``. Small problems go to LAPACK; larger ones use
shift-invert Lanczos with full reorthogonalization, where the shift makes
``B`` positive definite so a sparse LU factorization can be reused for
every iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import NoConvergence, NotSymmetric

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


@dataclass
class EigenResult:
    values: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray
    method: str
    iterations: int = 0


def standard_form(K, mass: Optional[np.ndarray] = None) -> sps.csr_matrix:
    """``M^-1/2 K M^-1/2`` as a sparse matrix; checks exact symmetry of K."""
    K = sps.csr_matrix(K)
    if K.shape[0] != K.shape[1]:
        raise NotSymmetric(f"matrix is not square: {K.shape}")
    if (K != K.T).nnz:
        raise NotSymmetric("matrix is not exactly symmetric")
    if mass is None:
        return K
    s = 1.0 / np.sqrt(np.asarray(mass, dtype=float))
    S = sps.diags(s)
    B = (S @ K @ S).tocsr()
    return ((B + B.T) * 0.5).tocsr()


def eigsh_smallest(B: sps.spmatrix, k: int, tol: float = 1e-8, method: str = "auto",
                   shift: float = 0.0, seed: int = 0, max_iter: Optional[int] = None) -> EigenResult:
    """k smallest eigenpairs of the symmetric matrix B.

    ``shift`` must make ``B + shift*I`` positive definite for the Lanczos
    route. Residuals are ``||B v - lam v||`` for unit vectors v, and each
    must satisfy ``residual <= tol * max(1, |lam|)``.
    """
    n = B.shape[0]
    if not 1 <= k < max(n, 2) and not (n == 1 and k == 1):
        raise ValueError(f"need 1 <= k < dimension, got k={k}, n={n}")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        vals, vecs = sla.eigh(B.toarray(), subset_by_index=[0, k - 1])
        res = _residuals(B, vals, vecs)
        return EigenResult(vals, res, vecs, "dense")
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    Bs = (B + shift * sps.identity(n, format="csr")).tocsc()
    lu = spla.splu(Bs)
    rng = np.random.default_rng(seed)
    vals, vecs, iters = _shift_invert_lanczos(lu.solve, B, k, tol, shift, rng, max_iter)
    res = _residuals(B, vals, vecs)
    return EigenResult(vals, res, vecs, "lanczos", iters)


def _residuals(B, vals, vecs) -> np.ndarray:
    R = B @ vecs - vecs * vals
    return np.linalg.norm(R, axis=0)


def _shift_invert_lanczos(solve: Callable, B, k: int, tol: float, shift: float,
                          rng: np.random.Generator, max_iter: Optional[int]):
    n = B.shape[0]
    locked_vals: List[float] = []
    locked_vecs: List[np.ndarray] = []
    total = 0
    for _ in range(6):
        lock = np.column_stack(locked_vecs) if locked_vecs else None
        want = min(k, n - len(locked_vecs))
        if want <= 0:
            break
        theta, Y, iters = _lanczos_pass(solve, B, want, tol, shift, rng, lock, max_iter)
        total += iters
        new_vals = 1.0 / theta - shift
        kth = sorted(locked_vals)[k - 1] if len(locked_vals) >= k else np.inf
        gained = [i for i, v in enumerate(new_vals) if v < kth - tol * max(1.0, abs(kth))]
        for i in range(len(new_vals)):
            locked_vals.append(float(new_vals[i]))
            locked_vecs.append(Y[:, i])
        if not gained:
            break
    order = np.argsort(locked_vals)[:k]
    vals = np.asarray(locked_vals)[order]
    vecs = np.column_stack([locked_vecs[i] for i in order])
    return vals, vecs, total


def _lanczos_pass(solve, B, k, tol, shift, rng, lock, max_iter):
    """Largest k eigenpairs of (B + shift I)^-1 restricted to the complement of ``lock``."""
    n = B.shape[0]
    free = n - (0 if lock is None else lock.shape[1])
    m_max = min(free, max_iter or max(20 * k, 120))

    def project(v):
        if lock is not None:
            v = v - lock @ (lock.T @ v)
            v = v - lock @ (lock.T @ v)
        return v

    Q = np.zeros((n, m_max))
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    q = project(rng.standard_normal(n))
    q /= np.linalg.norm(q)
    b_prev = 0.0
    q_prev = np.zeros(n)
    for j in range(m_max):
        Q[:, j] = q
        w = project(solve(q))
        a = q @ w
        w = w - a * q - b_prev * q_prev
        for _ in range(2):
            w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        w = project(w)
        b = np.linalg.norm(w)
        alpha[j], beta[j] = a, b
        last = j + 1 == m_max
        breakdown = b <= 1e-12 * max(abs(a), 1e-300)
        if (j + 1 >= k and ((j + 1) % 5 == 0 or last or breakdown)):
            theta, Y = _ritz(Q, alpha, beta, j + 1, k)
            lam = 1.0 / theta - shift
            res = _residuals(B, lam, Y)
            if np.all(res <= tol * np.maximum(1.0, np.abs(lam))):
                return theta, Y, j + 1
            if last:
                raise NoConvergence(
                    f"Lanczos did not converge in {m_max} iterations "
                    f"(max residual {res.max():.3e})"
                )
        if breakdown:
            # invariant subspace: continue from a fresh direction
            q_new = project(rng.standard_normal(n))
            q_new -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ q_new)
            q_new -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ q_new)
            nrm = np.linalg.norm(q_new)
            if nrm == 0:
                break
            beta[j] = 0.0
            q_prev, q, b_prev = q, q_new / nrm, 0.0
        else:
            q_prev, q, b_prev = q, w / b, b
    theta, Y = _ritz(Q, alpha, beta, j + 1, k)
    return theta, Y, j + 1


def _ritz(Q, alpha, beta, m, k):
    if m == 1:
        return np.array([alpha[0]]), Q[:, :1].copy()
    theta, S = sla.eigh_tridiagonal(alpha[:m], beta[: m - 1])
    idx = np.argsort(theta)[::-1][:k]
    Y = Q[:, :m] @ S[:, idx]
    Y /= np.linalg.norm(Y, axis=0)
    return theta[idx], Y

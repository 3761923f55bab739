"""Independent reference implementations used only by the tests.

Everything here is deliberately written from first principles (modified
Gram-Schmidt, Taylor series, Faddeev-LeVerrier, cyclic Jacobi) so the
library code is checked against a different algorithmic route.
"""

import numpy as np


def mgs_qr(M):
    """Modified Gram-Schmidt QR with a nonnegative R diagonal."""
    M = np.array(M, dtype=float)
    rows, cols = M.shape
    Q = np.zeros((rows, cols))
    R = np.zeros((cols, cols))
    for j in range(cols):
        v = M[:, j].copy()
        for i in range(j):
            R[i, j] = Q[:, i] @ v
            v = v - R[i, j] * Q[:, i]
        R[j, j] = np.linalg.norm(v)
        if R[j, j] > 0:
            Q[:, j] = v / R[j, j]
    return Q, R


def taylor_expm(M, terms=30):
    """Plain truncated Taylor sum of the matrix exponential."""
    M = np.asarray(M, dtype=float)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms + 1):
        term = term @ M / k
        out = out + term
    return out


def scaled_taylor_expm(M, terms=30):
    """Scaling + 30-term Taylor + squaring; accurate independent expm."""
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M, 1)
    s = max(0, int(np.ceil(np.log2(max(norm, 1e-300))))) if norm > 1.0 else 0
    F = taylor_expm(M / 2.0**s, terms)
    for _ in range(s):
        F = F @ F
    return F


def charpoly_coeffs(M):
    """Characteristic polynomial coefficients (monic, descending powers)
    by the Faddeev-LeVerrier trace recursion."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    N = np.zeros_like(M)
    for k in range(1, n + 1):
        N = M @ N + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(M @ N) / k
    return coeffs


def jacobi_sym_eigenvalues(S, sweeps=100, tol=1e-14):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(1.0, np.linalg.norm(A)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = 0.5 * np.arctan2(2.0 * A[p, q], A[q, q] - A[p, p])
                c, s = np.cos(theta), np.sin(theta)
                J = np.eye(n)
                J[p, p] = c
                J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))


def dense_arnoldi(A, v, m):
    """Plain single-vector Arnoldi with modified Gram-Schmidt."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    Q = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    Q[:, 0] = v / np.linalg.norm(v)
    for j in range(m):
        w = A @ Q[:, j]
        for i in range(j + 1):
            H[i, j] = Q[:, i] @ w
            w = w - H[i, j] * Q[:, i]
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j] < 1e-14:
            return Q[:, : j + 1], H[: j + 2, : j + 1]
        Q[:, j + 1] = w / H[j + 1, j]
    return Q, H


def seeded_matrix(seed, rows, cols=None, shift=0.0):
    """Standard-normal matrix from a fixed seed, optionally shifted on
    the diagonal (negative shift -> comfortably stable)."""
    cols = rows if cols is None else cols
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((rows, cols))
    if shift and rows == cols:
        M = M + shift * np.eye(rows)
    return M

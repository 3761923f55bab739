"""Dense real-matrix kernels shared by every other module.

All inputs and outputs are plain ``numpy.ndarray`` objects with float64
entries; matrices are validated to be finite on entry.  QR, SVD and the
real Schur form are delegated to LAPACK (via numpy/scipy) behind the
contracts below; the matrix exponential is computed here by scaling and
squaring with a diagonal Pade approximant, since the projected matrices
this library exponentiates are small.
"""

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES
from .exceptions import FactorizationError, RankDeficiencyError


def _as_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _as_square(M, name="M"):
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def qr_reduced(M, rank_tol=None):
    """Reduced QR factorization with a nonnegative-diagonal sign convention.

    Parameters
    ----------
    M
        Matrix with at least as many rows as columns.
    rank_tol
        Rank-deficiency threshold relative to ``||M||_F``; defaults to the
        central :data:`~sylkrylov.config.DEFAULT_TOLERANCES` value.  Pass
        ``0`` to disable the check.

    Returns
    -------
    (Q, R)
        ``M = Q @ R`` with orthonormal ``Q`` and upper triangular ``R``
        whose diagonal is nonnegative (this fixes the sign ambiguity and
        makes bases reproducible).

    Raises
    ------
    RankDeficiencyError
        If some ``|R[i, i]| <= rank_tol * ||M||_F``.  The caller decides
        between deflation and abort.
    """
    M = _as_matrix(M)
    rows, cols = M.shape
    if rows < cols:
        raise ValueError(f"qr_reduced needs rows >= cols, got {M.shape}")
    if rank_tol is None:
        rank_tol = DEFAULT_TOLERANCES.rank_tol
    Q, R = np.linalg.qr(M, mode="reduced")
    # Flip signs so that diag(R) >= 0.
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q = Q * signs[np.newaxis, :]
    R = R * signs[:, np.newaxis]
    if rank_tol > 0:
        scale = np.linalg.norm(M)
        if np.any(np.abs(np.diag(R)) <= rank_tol * scale):
            raise RankDeficiencyError(
                f"QR diagonal below {rank_tol:g} * ||M||_F: "
                f"min |R_ii| = {np.min(np.abs(np.diag(R))):.3e}, "
                f"||M||_F = {scale:.3e}"
            )
    return Q, R


def svd(M):
    """Singular value decomposition ``M = U @ diag(sigma) @ V.T``.

    Returns ``(U, sigma, V)`` with the singular values sorted in
    decreasing order and ``U``, ``V`` holding orthonormal columns.
    """
    M = _as_matrix(M)
    try:
        U, sigma, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"SVD did not converge: {exc}") from exc
    return U, sigma, Vt.T


def real_schur(M):
    """Real Schur decomposition ``M = Q @ S @ Q.T``.

    ``S`` is quasi upper triangular: 1x1 diagonal blocks hold real
    eigenvalues, 2x2 blocks hold complex-conjugate pairs.  Eigenvalue
    ordering is unspecified.
    """
    M = _as_square(M)
    if M.size == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    try:
        S, Q = scipy.linalg.schur(M, output="real")
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError(f"Schur iteration did not converge: {exc}") from exc
    return Q, S


def schur_eigenvalues(S):
    """Eigenvalues read off the diagonal blocks of a real Schur factor."""
    S = np.asarray(S)
    n = S.shape[0]
    eigs = []
    k = 0
    while k < n:
        if k + 1 < n and S[k + 1, k] != 0.0:
            eigs.extend(np.linalg.eigvals(S[k : k + 2, k : k + 2]))
            k += 2
        else:
            eigs.append(complex(S[k, k]))
            k += 1
    return np.array(eigs)


# Pade coefficients and 1-norm thresholds for expm (diagonal approximants
# of degree 3, 5, 7, 9 and 13 with the standard scaling thresholds).
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0,
        8821612800.0,
        2075673600.0,
        302702400.0,
        30270240.0,
        2162160.0,
        110880.0,
        3960.0,
        90.0,
        1.0,
    ),
    13: (
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ),
}

_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(M, degree):
    """Numerator split U (odd powers) and V (even powers) of the Pade
    approximant; exp(M) ~= solve(V - U, V + U)."""
    n = M.shape[0]
    b = _PADE_COEFFS[degree]
    ident = np.eye(n)
    M2 = M @ M
    if degree < 13:
        # Even polynomial in M2 for both U/M and V.
        powers = [ident, M2]
        for _ in range((degree - 1) // 2 - 1):
            powers.append(powers[-1] @ M2)
        U = M @ sum(b[k] * powers[k // 2] for k in range(1, degree + 1, 2))
        V = sum(b[k] * powers[k // 2] for k in range(0, degree + 1, 2))
    else:
        M4 = M2 @ M2
        M6 = M2 @ M4
        U = M @ (
            M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
            + b[7] * M6
            + b[5] * M4
            + b[3] * M2
            + b[1] * ident
        )
        V = (
            M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
            + b[6] * M6
            + b[4] * M4
            + b[2] * M2
            + b[0] * ident
        )
    return U, V


def expm(M):
    """Matrix exponential by Pade scaling and squaring.

    The approximant degree and the scaling power are selected from the
    1-norm of ``M`` using the standard thresholds; degree 13 with
    ``2^s``-scaling handles all large norms.
    """
    M = _as_square(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm1 = np.linalg.norm(M, 1)
    if norm1 <= _PADE_THETA[9]:
        for degree in (3, 5, 7, 9):
            if norm1 <= _PADE_THETA[degree]:
                U, V = _pade_uv(M, degree)
                return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm1 / _PADE_THETA[13]))))
    U, V = _pade_uv(M / 2.0**s, 13)
    F = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        F = F @ F
    return F


def lognorm2(M):
    """2-logarithmic norm: half the largest eigenvalue of ``M + M.T``.

    Controls the growth of the matrix exponential through
    ``||exp(t M)||_2 <= exp(t * lognorm2(M))`` for ``t >= 0``.
    """
    M = _as_square(M)
    if M.shape[0] == 0:
        return 0.0
    return 0.5 * float(np.linalg.eigvalsh(M + M.T)[-1])


def nu(M):
    """Smallest eigenvalue of the symmetric part ``(M + M.T) / 2``.

    Satisfies ``nu(M) == -lognorm2(-M)``.
    """
    M = _as_square(M)
    if M.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])

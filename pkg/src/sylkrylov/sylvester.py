"""Dense Sylvester equation solvers: Bartels-Stewart and a Kronecker oracle.

Equations are written as ``left @ Y + Y @ right.T + rhs = 0`` with square
``left`` (q x q) and ``right`` (r x r).  The Bartels-Stewart path reduces
both coefficient matrices to real Schur form and back-substitutes over the
quasi-triangular block columns; a brute-force Kronecker solve is provided
as an independent oracle for small systems.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .dense import _as_matrix, _as_square, real_schur, schur_eigenvalues
from .exceptions import SingularOperatorError, SizeGuardError, SpectralClashError

KRON_DIM_GUARD = 2500


@dataclass
class SylvesterSystem:
    """Data of one equation ``left @ Y + Y @ right.T + rhs = 0``.

    ``rhs`` may be given directly or as a low-rank factor pair
    ``(rhs_left, rhs_right)`` with ``rhs = rhs_left @ rhs_right.T``;
    factors are multiplied out before the solve.
    """

    left: np.ndarray
    right: np.ndarray
    rhs: np.ndarray | None = None
    rhs_left: np.ndarray | None = None
    rhs_right: np.ndarray | None = None

    def __post_init__(self):
        self.left = _as_square(np.atleast_2d(self.left), "left")
        self.right = _as_square(np.atleast_2d(self.right), "right")
        if self.rhs is None:
            if self.rhs_left is None or self.rhs_right is None:
                raise ValueError("need rhs or both low-rank factors")
            self.rhs_left = _as_matrix(np.atleast_2d(self.rhs_left), "rhs_left")
            self.rhs_right = _as_matrix(np.atleast_2d(self.rhs_right), "rhs_right")
        else:
            self.rhs = _as_matrix(np.atleast_2d(self.rhs), "rhs")

    def dense_rhs(self):
        if self.rhs is not None:
            return self.rhs
        return self.rhs_left @ self.rhs_right.T

    @property
    def shape(self):
        return self.left.shape[0], self.right.shape[0]


class SchurSylvesterSolver:
    """Bartels-Stewart solver with reusable Schur factorizations.

    Factoring ``left`` and ``right`` once and calling :meth:`solve` per
    right-hand side is what the time steppers do: their coefficient
    matrices are constant across steps.
    """

    def __init__(self, left, right, pivot_tol=None):
        self.left = _as_square(np.atleast_2d(left), "left")
        self.right = _as_square(np.atleast_2d(right), "right")
        if pivot_tol is None:
            pivot_tol = DEFAULT_TOLERANCES.sylvester_pivot_tol
        self.QA, self.SA = real_schur(self.left)
        self.QB, self.SB = real_schur(self.right)
        scale = np.linalg.norm(self.left) + np.linalg.norm(self.right)
        self.pivot_floor = pivot_tol * scale
        # Solvability check post-Schur: lambda_i(left) + mu_j(right) are the
        # diagonal solve pivots of the back-substitution.
        eigs_l = schur_eigenvalues(self.SA)
        eigs_r = schur_eigenvalues(self.SB)
        gap = np.min(np.abs(eigs_l[:, None] + eigs_r[None, :]))
        if gap <= self.pivot_floor:
            raise SpectralClashError(
                f"eigenvalue sum {gap:.3e} below pivot floor {self.pivot_floor:.3e}"
            )
        self._blocks_right = _diag_blocks(self.SB)

    def solve(self, rhs):
        """Return Y with ``left @ Y + Y @ right.T + rhs = 0``."""
        rhs = _as_matrix(np.atleast_2d(rhs), "rhs")
        q, r = self.left.shape[0], self.right.shape[0]
        if rhs.shape != (q, r):
            raise ValueError(f"rhs shape {rhs.shape} != ({q}, {r})")
        C = self.QA.T @ rhs @ self.QB
        Y = np.empty((q, r))
        ident = np.eye(q)
        # Y @ SB.T couples block column j to block columns l >= j, so run
        # from the last block column to the first.
        for j0, j1 in reversed(self._blocks_right):
            acc = -C[:, j0:j1]
            if j1 < r:
                acc = acc - Y[:, j1:] @ self.SB[j0:j1, j1:].T
            if j1 - j0 == 1:
                shifted = self.SA + self.SB[j0, j0] * ident
                Y[:, j0] = _solve_pivot_checked(shifted, acc[:, 0], self.pivot_floor)
            else:
                B2 = self.SB[j0:j1, j0:j1]
                # Coupled pair of columns: a 2q x 2q block system.
                big = np.block(
                    [
                        [self.SA + B2[0, 0] * ident, B2[0, 1] * ident],
                        [B2[1, 0] * ident, self.SA + B2[1, 1] * ident],
                    ]
                )
                sol = _solve_pivot_checked(
                    big, np.concatenate([acc[:, 0], acc[:, 1]]), self.pivot_floor
                )
                Y[:, j0] = sol[:q]
                Y[:, j0 + 1] = sol[q:]
        return self.QA @ Y @ self.QB.T


def _diag_blocks(S):
    """(start, stop) index pairs of the 1x1/2x2 diagonal blocks of a real
    Schur factor."""
    n = S.shape[0]
    blocks = []
    k = 0
    while k < n:
        if k + 1 < n and S[k + 1, k] != 0.0:
            blocks.append((k, k + 2))
            k += 2
        else:
            blocks.append((k, k + 1))
            k += 1
    return blocks


def _solve_pivot_checked(A, b, pivot_floor):
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SpectralClashError(
            f"singular diagonal solve in back-substitution (floor {pivot_floor:.3e})"
        ) from exc


def bartels_stewart(sys, pivot_tol=None):
    """Solve a :class:`SylvesterSystem` by Bartels-Stewart.

    Raises :class:`~sylkrylov.exceptions.SpectralClashError` when the two
    spectra (nearly) cancel, i.e. a diagonal solve pivot falls below
    ``pivot_tol * (||left||_F + ||right||_F)``.
    """
    return SchurSylvesterSolver(sys.left, sys.right, pivot_tol).solve(sys.dense_rhs())


def kron_solve(sys):
    """Brute-force oracle: solve the vectorized system
    ``(I (x) left + right (x) I) vec(Y) = -vec(rhs)`` by dense Gaussian
    elimination with partial pivoting.

    Guarded to ``q * r <= 2500`` unknowns.
    """
    q, r = sys.shape
    if q * r > KRON_DIM_GUARD:
        raise SizeGuardError(f"kron_solve guard: {q}*{r} > {KRON_DIM_GUARD}")
    big = np.kron(np.eye(r), sys.left) + np.kron(sys.right, np.eye(q))
    rhs = sys.dense_rhs()
    try:
        y = np.linalg.solve(big, -rhs.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(f"singular Kronecker matrix: {exc}") from exc
    return y.reshape((q, r), order="F")

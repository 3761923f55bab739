"""Block Arnoldi and extended block Arnoldi bases.

Both builders grow an orthonormal block basis one step at a time, so the
outer solver loop can extend a decomposition without recomputing earlier
blocks; snapshots taken at successive steps share their prefix exactly
(the QR sign convention makes blocks deterministic).

Orthogonalization is classical block Gram-Schmidt applied twice per
candidate block, which keeps the basis orthogonal to working precision
for the basis sizes this library targets.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .dense import qr_reduced
from .exceptions import RankDeficiencyError


@dataclass
class BlockKrylovDecomposition:
    """Snapshot of a block Krylov basis after ``m`` steps.

    Attributes
    ----------
    basis
        ``n x (m+1)d`` matrix of blocks ``V_1 .. V_{m+1}`` (only ``m``
        blocks when the process stopped on an invariant subspace).
    T
        ``md x md`` block upper Hessenberg restriction of the operator,
        ``T = Vm.T @ A @ Vm``.
    T_next
        ``d x d`` coupling block ``T_{m+1,m}`` linking the basis to block
        ``m+1`` (zero after a breakdown).
    block_width
        Block size ``d``: the number of starting columns ``s`` for the
        block Arnoldi flavor, ``2 s`` for the extended flavor.
    m
        Completed steps.
    flavor
        ``"ba"`` or ``"eba"``.
    breakdown
        True when the basis stopped growing before the requested step
        count.
    """

    basis: np.ndarray
    T: np.ndarray
    T_next: np.ndarray
    block_width: int
    m: int
    flavor: str
    breakdown: bool = False

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def Vm(self):
        """Basis of the subspace itself: the first ``m`` blocks."""
        return self.basis[:, : self.m * self.block_width]

    @property
    def last_block(self):
        """Block ``V_{m+1}``, or None after a breakdown."""
        d = self.block_width
        if self.basis.shape[1] >= (self.m + 1) * d:
            return self.basis[:, self.m * d : (self.m + 1) * d]
        return None


class _ArnoldiBuilder:
    """Shared stepping machinery; subclasses provide the candidate block
    and the restriction-matrix bookkeeping."""

    flavor = ""

    def __init__(self, op, E, rank_tol=None):
        self.op = op
        self.E = np.atleast_2d(np.asarray(E, dtype=float))
        if self.E.ndim != 2 or self.E.shape[0] != op.n:
            raise ValueError(f"starting block must be {op.n} x s")
        self.s = self.E.shape[1]
        if self.s < 1:
            raise ValueError("starting block needs at least one column")
        self.rank_tol = DEFAULT_TOLERANCES.rank_tol if rank_tol is None else rank_tol
        self.m = 0
        self.breakdown = False
        V1, _ = qr_reduced(self._first_block(), rank_tol=self.rank_tol)
        self.blocks = [V1]
        self._V = V1.copy()
        self._t_cols = []  # column blocks of the restriction matrix, per step

    @property
    def d(self):
        return self.blocks[0].shape[1]

    def _first_block(self):
        raise NotImplementedError

    def _candidate(self, Vj):
        raise NotImplementedError

    def _restriction_column(self, j, H_col, H_next):
        """Column ``j`` (0-based) of the restriction matrix, called after
        the step has been committed; ``H_next`` is None on a terminal
        (invariant subspace) step."""
        raise NotImplementedError

    def step(self):
        """Extend the basis by one block; returns False on breakdown."""
        if self.breakdown:
            return False
        j = self.m
        Vj = self.blocks[j]
        W = self._candidate(Vj)
        raw_norm = np.linalg.norm(W)
        # Two classical Gram-Schmidt passes against all committed blocks.
        H1 = self._V.T @ W
        W = W - self._V @ H1
        H2 = self._V.T @ W
        W = W - self._V @ H2
        H_col = H1 + H2
        if np.linalg.norm(W) <= self.rank_tol * max(1.0, raw_norm):
            # Candidate entirely inside the current span: the subspace is
            # invariant.  Commit the step with a zero coupling block.
            self.m += 1
            self.breakdown = True
            self._t_cols.append(self._restriction_column(j, H_col, None))
            return False
        try:
            Vnext, R = qr_reduced(W, rank_tol=self.rank_tol)
        except RankDeficiencyError:
            # Partial rank deficiency: no deflation, stop with the last
            # fully completed step.
            self.breakdown = True
            return False
        self.blocks.append(Vnext)
        self._V = np.concatenate([self._V, Vnext], axis=1)
        self.m += 1
        self._t_cols.append(self._restriction_column(j, H_col, R))
        return True

    def decomposition(self):
        """Immutable snapshot at the current step count."""
        m, d = self.m, self.d
        T = np.zeros((m * d, m * d))
        T_next = np.zeros((d, d))
        for j, col in enumerate(self._t_cols[:m]):
            take = min(col.shape[0], m * d)
            T[:take, j * d : (j + 1) * d] = col[:take]
        if m and self._t_cols[m - 1].shape[0] >= (m + 1) * d:
            T_next = self._t_cols[m - 1][m * d : (m + 1) * d].copy()
        return BlockKrylovDecomposition(
            basis=self._V.copy(),
            T=T,
            T_next=T_next,
            block_width=d,
            m=m,
            flavor=self.flavor,
            breakdown=self.breakdown,
        )


class BlockArnoldiBuilder(_ArnoldiBuilder):
    """Block Arnoldi: candidate ``A @ V_j``; the restriction matrix is the
    Gram-Schmidt coefficient matrix itself."""

    flavor = "ba"

    def _first_block(self):
        return self.E

    def _candidate(self, Vj):
        return self.op.apply(Vj)

    def _restriction_column(self, j, H_col, H_next):
        if H_next is None:
            return H_col
        return np.concatenate([H_col, H_next], axis=0)


class ExtendedBlockArnoldiBuilder(_ArnoldiBuilder):
    """Extended block Arnoldi: the first block comes from the QR of
    ``[E, A^{-1} E]`` and each candidate is ``[A V_j^(1), A^{-1} V_j^(2)]``
    (first/second ``s`` columns of the previous block).

    The restriction matrix is not the Gram-Schmidt coefficient matrix
    here; its column for step ``j`` is computed directly as
    ``V_i.T @ (A @ V_j)`` over the committed blocks, which costs one extra
    sparse product per step.
    """

    flavor = "eba"

    def _first_block(self):
        return np.concatenate([self.E, self.op.solve(self.E)], axis=1)

    def _candidate(self, Vj):
        s = self.s
        return np.concatenate(
            [self.op.apply(Vj[:, :s]), self.op.solve(Vj[:, s:])], axis=1
        )

    def _restriction_column(self, j, H_col, H_next):
        # self._V already contains V_{j+2} when the step succeeded, so the
        # product covers every row block through T_{j+2, j+1} (1-based).
        return self._V.T @ self.op.apply(self.blocks[j])


def block_arnoldi(op, E, m, rank_tol=None):
    """Run ``m`` block Arnoldi steps for the pair ``(op, E)``.

    Stops early (with the breakdown flag set) if a candidate block is
    rank deficient.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if m < 1:
        raise ValueError("m must be >= 1")
    if m * E.shape[1] > op.n:
        raise ValueError(f"m*s = {m * E.shape[1]} exceeds the dimension {op.n}")
    builder = BlockArnoldiBuilder(op, E, rank_tol=rank_tol)
    for _ in range(m):
        if not builder.step():
            break
    return builder.decomposition()


def extended_block_arnoldi(op, E, m, rank_tol=None):
    """Run ``m`` extended block Arnoldi steps for the pair ``(op, E)``.

    Requires a nonsingular operator (each step solves against it).
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if m < 1:
        raise ValueError("m must be >= 1")
    if 2 * m * E.shape[1] > op.n:
        raise ValueError(f"2*m*s = {2 * m * E.shape[1]} exceeds the dimension {op.n}")
    builder = ExtendedBlockArnoldiBuilder(op, E, rank_tol=rank_tol)
    for _ in range(m):
        if not builder.step():
            break
    return builder.decomposition()

"""Sparse operator wrapper: apply to a dense block, solve against a dense
block, with the LU factorization cached on first solve.

Also hosts the Matrix Market coordinate reader used by the file-based
problem presets.
"""

from pathlib import Path

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .config import DEFAULT_TOLERANCES
from .exceptions import SingularOperatorError


class _Factorization:
    """Lazily built sparse LU, shared between an operator and its transpose."""

    def __init__(self, csc, pivot_tol):
        self.csc = csc
        self.pivot_tol = pivot_tol
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            try:
                lu = scipy.sparse.linalg.splu(self.csc)
            except RuntimeError as exc:
                raise SingularOperatorError(f"sparse LU failed: {exc}") from exc
            scale = max(1.0, float(np.max(np.abs(self.csc.data), initial=0.0)))
            pivots = np.abs(lu.U.diagonal())
            if pivots.size and np.min(pivots) <= self.pivot_tol * scale:
                raise SingularOperatorError(
                    f"sparse LU pivot {np.min(pivots):.3e} below threshold"
                )
            self._lu = lu
        return self._lu


class SparseOperator:
    """Square sparse matrix with block apply/solve.

    Both operations take and return dense ``n x k`` blocks.  The LU
    factorization (with SuperLU's fill-reducing column ordering) is
    computed on the first :meth:`solve` and reused afterwards; operators
    are immutable so the cache never needs invalidation.
    """

    def __init__(self, matrix, pivot_tol=None, _shared=None, _trans=False):
        mat = scipy.sparse.csr_matrix(matrix)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got {mat.shape}")
        if mat.nnz and not np.all(np.isfinite(mat.data)):
            raise ValueError("operator contains non-finite entries")
        self._matrix = mat
        self._trans = _trans
        if _shared is None:
            if pivot_tol is None:
                pivot_tol = DEFAULT_TOLERANCES.sparse_pivot_tol
            base = mat.T.tocsc() if _trans else mat.tocsc()
            _shared = _Factorization(base, pivot_tol)
        self._shared = _shared

    @classmethod
    def from_triplets(cls, n, rows, cols, values, **kwargs):
        mat = scipy.sparse.coo_matrix(
            (np.asarray(values, dtype=float), (rows, cols)), shape=(n, n)
        )
        return cls(mat, **kwargs)

    @property
    def n(self):
        return self._matrix.shape[0]

    @property
    def shape(self):
        return self._matrix.shape

    @property
    def matrix(self):
        """The underlying scipy CSR matrix (treat as read-only)."""
        return self._matrix

    def to_dense(self):
        return self._matrix.toarray()

    def transpose(self):
        """Transposed operator sharing this operator's factorization."""
        return SparseOperator(
            self._matrix.T.tocsr(), _shared=self._shared, _trans=not self._trans
        )

    @property
    def T(self):
        return self.transpose()

    def apply(self, X):
        """Sparse matrix-block product ``op @ X``."""
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.n:
            raise ValueError(f"apply: block has {X.shape[0]} rows, operator is {self.n}")
        return np.asarray(self._matrix @ X)

    def apply_left(self, X):
        """Block-matrix product from the left, ``X @ op``."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise ValueError(f"apply_left: block has {X.shape[-1]} cols, operator is {self.n}")
        return np.asarray(X @ self._matrix)

    def solve(self, X):
        """Return W with ``op @ W = X``; the factorization is cached."""
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.n:
            raise ValueError(f"solve: block has {X.shape[0]} rows, operator is {self.n}")
        lu = self._shared.lu
        trans = "T" if self._trans else "N"
        return lu.solve(np.ascontiguousarray(X), trans=trans)


def read_matrix_market(path):
    """Read a Matrix Market coordinate file into a CSR matrix.

    Supports ``matrix coordinate real general`` and ``... symmetric``
    headers with 1-based indices; symmetric files are expanded to full
    storage.
    """
    path = Path(path)
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        parts = header.lower().split()
        if (
            len(parts) != 5
            or parts[0] != "%%matrixmarket"
            or parts[1] != "matrix"
            or parts[2] != "coordinate"
            or parts[3] != "real"
            or parts[4] not in ("general", "symmetric")
        ):
            raise ValueError(f"unsupported Matrix Market header: {header!r}")
        symmetric = parts[4] == "symmetric"
        size_line = fh.readline()
        while size_line.strip() == "" or size_line.lstrip().startswith("%"):
            size_line = fh.readline()
        nrows, ncols, nnz = (int(tok) for tok in size_line.split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=float)
        k = 0
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            i_s, j_s, v_s = line.split()
            rows[k] = int(i_s) - 1
            cols[k] = int(j_s) - 1
            vals[k] = float(v_s)
            k += 1
        if k != nnz:
            raise ValueError(f"expected {nnz} entries, file has {k}")
    return _assemble(nrows, ncols, rows, cols, vals, symmetric)


def _assemble(nrows, ncols, rows, cols, vals, symmetric):
    if symmetric:
        off = rows != cols
        rows_full = np.concatenate([rows, cols[off]])
        cols_full = np.concatenate([cols, rows[off]])
        vals_full = np.concatenate([vals, vals[off]])
    else:
        rows_full, cols_full, vals_full = rows, cols, vals
    mat = scipy.sparse.coo_matrix(
        (vals_full, (rows_full, cols_full)), shape=(nrows, ncols)
    )
    return mat.tocsr()


def load_operator(path, **kwargs):
    """Load a square Matrix Market file as a :class:`SparseOperator`."""
    mat = read_matrix_market(path)
    return SparseOperator(mat, **kwargs)

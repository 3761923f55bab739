import numpy as np
import pytest

from sylkrylov.exceptions import SingularOperatorError
from sylkrylov.sparse import SparseOperator, load_operator, read_matrix_market

from oracles import seeded_matrix


def five_point_laplacian(n0, h):
    """Classic M-matrix form: 4/h^2 on the diagonal, -1/h^2 at neighbors."""
    n = n0 * n0
    M = np.zeros((n, n))
    for iy in range(n0):
        for ix in range(n0):
            k = iy * n0 + ix
            M[k, k] = 4.0 / h**2
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jx, jy = ix + dx, iy + dy
                if 0 <= jx < n0 and 0 <= jy < n0:
                    M[k, jy * n0 + jx] = -1.0 / h**2
    return M


class TestApply:
    def test_identity(self):
        op = SparseOperator(np.eye(5))
        X = seeded_matrix(0, 5, 2)
        assert np.allclose(op.apply(X), X)

    def test_diagonal_scaling(self):
        d = np.array([1.0, -2.0, 3.0, 0.5])
        op = SparseOperator(np.diag(d))
        X = seeded_matrix(1, 4, 3)
        assert np.allclose(op.apply(X), d[:, None] * X)

    def test_hand_assembled_stencil(self):
        h = 0.25
        stencil = five_point_laplacian(3, h)
        op = SparseOperator(stencil)
        e5 = np.zeros((9, 1))
        e5[4, 0] = 1.0  # center node of the 3x3 grid
        col = op.apply(e5)[:, 0]
        expected = np.zeros(9)
        expected[4] = 4.0 / h**2
        for j in (1, 3, 5, 7):
            expected[j] = -1.0 / h**2
        assert np.allclose(col, expected)

    def test_dimension_mismatch(self):
        op = SparseOperator(np.eye(4))
        with pytest.raises(ValueError):
            op.apply(np.ones((5, 1)))


class TestSolve:
    def test_identity(self):
        op = SparseOperator(np.eye(6))
        X = seeded_matrix(2, 6, 2)
        assert np.allclose(op.solve(X), X)

    def test_diagonal(self):
        d = np.array([2.0, -4.0, 0.5])
        op = SparseOperator(np.diag(d))
        X = seeded_matrix(3, 3, 2)
        assert np.allclose(op.solve(X), X / d[:, None])

    def test_against_dense_lu(self):
        rng = np.random.default_rng(13)
        M = rng.standard_normal((50, 50)) * (rng.random((50, 50)) < 0.1)
        M += np.diag(np.abs(M).sum(axis=1) + 1.0)  # diagonally dominant
        op = SparseOperator(M)
        X = rng.standard_normal((50, 3))
        W = op.solve(X)
        Wd = np.linalg.solve(M, X)
        assert np.linalg.norm(W - Wd) < 1e-10 * np.linalg.norm(Wd)
        assert np.linalg.norm(op.apply(W) - X) < 1e-10 * np.linalg.norm(X)

    def test_singular_error(self):
        M = np.eye(4)
        M[2, 2] = 0.0
        with pytest.raises(SingularOperatorError):
            SparseOperator(M).solve(np.ones((4, 1)))

    def test_factorization_cached(self):
        op = SparseOperator(np.diag([1.0, 2.0, 3.0]))
        op.solve(np.ones((3, 1)))
        lu_first = op._shared._lu
        op.solve(np.ones((3, 2)))
        assert op._shared._lu is lu_first


class TestTranspose:
    def test_transpose_solve_shares_factorization(self):
        M = seeded_matrix(5, 8, shift=-4.0)
        op = SparseOperator(M)
        opT = op.T
        X = seeded_matrix(6, 8, 2)
        assert np.allclose(opT.apply(X), M.T @ X)
        W = opT.solve(X)
        assert np.linalg.norm(M.T @ W - X) < 1e-10 * np.linalg.norm(X)
        assert opT._shared is op._shared

    def test_apply_left(self):
        M = seeded_matrix(7, 5)
        op = SparseOperator(M)
        X = seeded_matrix(8, 3, 5)
        assert np.allclose(op.apply_left(X), X @ M)


def test_solve_apply_roundtrip_bulk():
    rng = np.random.default_rng(99)
    M = rng.standard_normal((40, 40)) * (rng.random((40, 40)) < 0.15)
    M += np.diag(np.abs(M).sum(axis=1) + 1.0)
    op = SparseOperator(M)
    for _ in range(100):
        X = rng.standard_normal((40, 2))
        assert (
            np.linalg.norm(op.solve(op.apply(X)) - X)
            <= 1e-10 * np.linalg.norm(X)
        )


class TestMatrixMarket:
    def test_general_roundtrip(self, tmp_path):
        path = tmp_path / "gen.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n"
            "% a comment\n"
            "3 3 4\n"
            "1 1 2.0\n"
            "2 2 -1.5\n"
            "3 1 4.0\n"
            "3 3 1.0\n"
        )
        mat = read_matrix_market(path)
        dense = np.array([[2.0, 0, 0], [0, -1.5, 0], [4.0, 0, 1.0]])
        assert np.allclose(mat.toarray(), dense)
        op = load_operator(path)
        X = seeded_matrix(1, 3, 2)
        assert np.allclose(op.apply(X), dense @ X)

    def test_symmetric_expansion(self, tmp_path):
        path = tmp_path / "sym.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "3 3 4\n"
            "1 1 -2.0\n"
            "2 1 1.0\n"
            "2 2 -2.0\n"
            "3 3 -2.0\n"
        )
        mat = read_matrix_market(path).toarray()
        assert mat[0, 1] == mat[1, 0] == 1.0
        assert np.allclose(mat, mat.T)

    def test_unsupported_header(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("%%MatrixMarket matrix array real general\n1 1\n1.0\n")
        with pytest.raises(ValueError):
            read_matrix_market(path)

    def test_complex_rejected(self, tmp_path):
        path = tmp_path / "cx.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 0.0\n"
        )
        with pytest.raises(ValueError):
            read_matrix_market(path)

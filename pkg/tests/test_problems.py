import numpy as np
import pytest

from sylkrylov.bounds import lognorm2_sparse
from sylkrylov.driver import DSEProblem
from sylkrylov.exceptions import SizeGuardError
from sylkrylov.problems import (
    FDOperatorSpec,
    fd_operator,
    integral_reference,
    kronecker_oracle,
    make_preset,
    random_low_rank,
)
from sylkrylov.quadrature import QuadratureSpec
from sylkrylov.sparse import SparseOperator

from oracles import seeded_matrix


class TestFDOperator:
    def test_pure_laplacian_n0_2(self):
        spec = FDOperatorSpec(n0=2)
        A = fd_operator(spec).to_dense()
        h = 1.0 / 3.0
        diag = -4.0 / h**2
        off = 1.0 / h**2
        expected = np.array(
            [
                [diag, off, off, 0.0],
                [off, diag, 0.0, off],
                [off, 0.0, diag, off],
                [0.0, off, off, diag],
            ]
        )
        assert np.allclose(A, expected)
        # operator is the Laplacian itself: negative definite
        assert np.linalg.eigvalsh(A).max() < 0

    def test_constant_reaction_shifts_diagonal(self):
        base = fd_operator(FDOperatorSpec(n0=4)).to_dense()
        shifted = fd_operator(FDOperatorSpec(n0=4, g=lambda x, y: 2.5)).to_dense()
        assert np.allclose(shifted, base + 2.5 * np.eye(16))

    def test_LA_preset_hand_stencil_at_center(self):
        n0 = 3
        h = 0.25
        spec = FDOperatorSpec.preset("LA", n0)
        A = fd_operator(spec)
        # discrete samples of u(x, y) = x*y at the inner nodes
        xs = np.array([(ix + 1) * h for ix in range(n0)])
        u = np.array([x * y for y in xs for x in xs])
        result = A.apply(u.reshape(-1, 1))[:, 0]
        # hand evaluation at the center node (0.5, 0.5)
        uc, ue, uw, un, us = 0.25, 0.375, 0.125, 0.375, 0.125
        f1 = 0.5 + 10.0 * 0.25
        f2 = np.sqrt(2.0 * 0.25 + 0.25)
        g1 = 0.25 - 0.25
        hand = (
            (ue + uw + un + us - 4.0 * uc) / h**2
            - f1 * (ue - uw) / (2.0 * h)
            + f2 * (un - us) / (2.0 * h)
            + g1 * uc
        )
        center = 1 * n0 + 1
        assert result[center] == pytest.approx(hand, rel=1e-13)

    def test_stability_of_LA_preset(self):
        for n0 in (5, 10, 20):
            A = fd_operator(FDOperatorSpec.preset("LA", n0))
            assert lognorm2_sparse(A) < 0.0

    def test_min_size_guard(self):
        with pytest.raises(ValueError):
            FDOperatorSpec(n0=1)


class TestRandomLowRank:
    def test_deterministic(self):
        E1, F1 = random_low_rank(30, 20, 2, seed=7)
        E2, F2 = random_low_rank(30, 20, 2, seed=7)
        assert np.array_equal(E1, E2)
        assert np.array_equal(F1, F2)
        E3, _ = random_low_rank(30, 20, 2, seed=8)
        assert not np.array_equal(E1, E3)

    def test_range(self):
        E, F = random_low_rank(50, 40, 3, seed=1)
        for block in (E, F):
            assert block.min() >= 0.0 and block.max() < 1.0

    def test_numerical_rank(self):
        E, _ = random_low_rank(100, 100, 2, seed=3)
        sv = np.linalg.svd(E, compute_uv=False)
        assert sv[1] / sv[0] > 1e-8

    def test_size_guard(self):
        with pytest.raises(ValueError):
            random_low_rank(3, 3, 5, seed=0)


def small_problem(seed, n, p, s=1, tf=2.0):
    A = SparseOperator(seeded_matrix(seed, n, shift=-3.0))
    B = SparseOperator(seeded_matrix(seed + 1, p, shift=-3.0))
    E = seeded_matrix(seed + 2, n, s)
    F = seeded_matrix(seed + 3, p, s)
    return DSEProblem(A=A, B=B, E=E, F=F, t0=0.0, Tf=tf)


class TestKroneckerOracle:
    def test_zero_forcing(self):
        prob = small_problem(0, 4, 4)
        prob.E = np.zeros_like(prob.E)
        out = kronecker_oracle(prob, np.linspace(0, 1, 4), h_inner=0.01)
        assert all(np.allclose(X, 0.0) for X in out)

    def test_scalar_closed_form(self):
        a, b, c = -2.0, -0.5, 3.0
        prob = DSEProblem(
            A=SparseOperator([[a]]), B=SparseOperator([[b]]),
            E=[[c]], F=[[1.0]], t0=0.0, Tf=1.0,
        )
        grid = np.linspace(0, 1, 5)
        out = kronecker_oracle(prob, grid, h_inner=1e-5)
        for t, X in zip(grid, out):
            exact = c * (np.exp((a + b) * t) - 1.0) / (a + b)
            assert X[0, 0] == pytest.approx(exact, abs=2e-5)

    def test_size_guard(self):
        prob = small_problem(5, 250, 250)
        with pytest.raises(SizeGuardError):
            kronecker_oracle(prob, np.linspace(0, 1, 3), h_inner=0.1)


class TestIntegralReference:
    def test_zero_forcing_propagates_x0(self):
        n = 5
        A = SparseOperator(seeded_matrix(1, n, shift=-2.0))
        B = SparseOperator(seeded_matrix(2, n, shift=-2.0))
        Z0 = seeded_matrix(3, n, 1)
        prob = DSEProblem(
            A=A, B=B, E=np.zeros((n, 1)), F=np.zeros((n, 1)),
            Z0=Z0, Z0t=Z0, t0=0.0, Tf=1.0, strict=False,
        )
        out = integral_reference(prob, np.array([0.0, 0.5, 1.0]))
        import scipy.linalg

        for t, X in zip((0.0, 0.5, 1.0), out):
            expected = (
                scipy.linalg.expm(t * A.to_dense())
                @ (Z0 @ Z0.T)
                @ scipy.linalg.expm(t * B.to_dense())
            )
            assert np.allclose(X, expected, atol=1e-11)

    def test_zero_operators_linear_growth(self):
        n = 4
        Z = SparseOperator(np.zeros((n, n)))
        E = seeded_matrix(4, n, 1)
        F = seeded_matrix(5, n, 1)
        prob = DSEProblem(A=Z, B=Z, E=E, F=F, t0=0.0, Tf=2.0)
        out = integral_reference(prob, np.array([0.0, 1.0, 2.0]))
        assert np.allclose(out[0], 0.0)
        assert np.allclose(out[1], E @ F.T, rtol=1e-12)
        assert np.allclose(out[2], 2.0 * (E @ F.T), rtol=1e-12)

    def test_size_guard(self):
        prob = small_problem(6, 3, 3)
        prob.A._matrix.resize((3, 3))
        big = small_problem(7, 401, 3)
        with pytest.raises(SizeGuardError):
            integral_reference(big, np.array([0.0, 1.0]))


def test_oracle_agreement():
    # convection-diffusion instances with n = p <= 20 and random low-rank
    # terms; at T_f = 2 both oracles must agree to 1e-6 relative
    for n0, seed in ((3, 11), (4, 12)):
        A = fd_operator(FDOperatorSpec.preset("LA", n0))
        B = fd_operator(FDOperatorSpec.preset("LB", n0))
        E, F = random_low_rank(A.n, B.n, 2, seed)
        prob = DSEProblem(A=A, B=B, E=E, F=F, t0=0.0, Tf=2.0)
        grid = np.linspace(0.0, 2.0, 5)
        ref = integral_reference(prob, grid, QuadratureSpec(12, 8))
        kron = kronecker_oracle(prob, grid, h_inner=1e-4)
        for X_ref, X_kron in zip(ref[1:], kron[1:]):
            rel = np.linalg.norm(X_ref - X_kron) / max(1e-30, np.linalg.norm(X_ref))
            assert rel <= 1e-6


class TestPresets:
    def test_example1_shapes(self):
        prob = make_preset("example1", n0=5, p0=4, s=2, seed=0)
        assert prob.n == 25 and prob.p == 16 and prob.s == 2
        assert prob.sign == 1.0
        assert (prob.t0, prob.Tf) == (0.0, 2.0)

    def test_surrogate_is_symmetric_negative_definite(self):
        prob = make_preset("surrogate100")
        A = prob.A.to_dense()
        assert prob.n == 100
        assert np.allclose(A, A.T)
        assert np.linalg.eigvalsh(A).max() < 0
        assert prob.sign == -1.0
        assert prob.B is prob.A

    def test_example2_missing_file_message(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SYLKRYLOV_DATA_DIR", str(tmp_path))
        with pytest.raises(FileNotFoundError, match="rail1357"):
            make_preset("example2")

    def test_example2_loads_when_file_present(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SYLKRYLOV_DATA_DIR", str(tmp_path))
        path = tmp_path / "rail1357.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "3 3 3\n1 1 -1.0\n2 2 -2.0\n3 3 -3.0\n"
        )
        prob = make_preset("example2", s=1)
        assert prob.n == 3 and prob.sign == -1.0

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            make_preset("nope")

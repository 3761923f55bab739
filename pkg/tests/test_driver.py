import numpy as np
import pytest

from sylkrylov.driver import (
    DSEProblem,
    SolverConfig,
    reconstruct_dense,
    solve,
)
from sylkrylov.exceptions import SizeGuardError, UnsupportedInputError
from sylkrylov.integrators import truncate_factorize
from sylkrylov.krylov import extended_block_arnoldi
from sylkrylov.problems import integral_reference, make_preset
from sylkrylov.projection import residual_norms
from sylkrylov.sparse import SparseOperator

from oracles import seeded_matrix


class TestConfigValidation:
    def test_method_names(self):
        with pytest.raises(ValueError, match="method"):
            SolverConfig(method="bdf7")
        with pytest.raises(ValueError, match="basis"):
            SolverConfig(basis="qr")
        with pytest.raises(ValueError, match="tol"):
            SolverConfig(tol=0.0)
        with pytest.raises(ValueError, match="m_max"):
            SolverConfig(m_max=0)

    def test_problem_validation(self):
        A = SparseOperator(np.eye(4))
        with pytest.raises(ValueError, match="rank deficient"):
            DSEProblem(A=A, B=A, E=np.zeros((4, 1)), F=np.ones((4, 1)),
                       t0=0.0, Tf=1.0)
        with pytest.raises(ValueError, match="t0 < Tf"):
            DSEProblem(A=A, B=A, E=np.ones((4, 1)), F=np.ones((4, 1)),
                       t0=1.0, Tf=1.0)
        with pytest.raises(ValueError, match="sign"):
            DSEProblem(A=A, B=A, E=np.ones((4, 1)), F=np.ones((4, 1)),
                       t0=0.0, Tf=1.0, sign=2.0)


class TestDriverBasics:
    def test_zero_term_degenerate(self):
        A = SparseOperator(seeded_matrix(0, 8, shift=-3.0))
        prob = DSEProblem(A=A, B=A, E=np.zeros((8, 1)), F=np.zeros((8, 1)),
                          t0=0.0, Tf=1.0, strict=False)
        sol = solve(prob, SolverConfig(method="exp", m_max=5))
        assert sol.converged and sol.m_final == 1
        assert sol.residual_history == [0.0]
        assert all(ZA.shape[1] == 0 for ZA, _ in sol.factors)
        assert np.allclose(reconstruct_dense(sol, 0), 0.0)

    def test_exp_requires_zero_x0(self):
        A = SparseOperator(seeded_matrix(1, 8, shift=-3.0))
        Z0 = seeded_matrix(2, 8, 1)
        prob = DSEProblem(A=A, B=A, E=np.ones((8, 1)), F=np.ones((8, 1)),
                          t0=0.0, Tf=1.0, Z0=Z0, Z0t=Z0)
        with pytest.raises(UnsupportedInputError):
            solve(prob, SolverConfig(method="exp"))

    def test_bdf_accepts_projected_x0(self):
        # X0 inside the span: BDF from Y0 must match the reference
        n = 12
        A = SparseOperator(seeded_matrix(3, n, shift=-4.0))
        B = SparseOperator(seeded_matrix(4, n, shift=-4.0))
        E = seeded_matrix(5, n, 1)
        F = seeded_matrix(6, n, 1)
        prob = DSEProblem(A=A, B=B, E=E, F=F, t0=0.0, Tf=1.0,
                          Z0=E, Z0t=F)  # X0 = E F^T lies in the spans
        cfg = SolverConfig(method="bdf2", h=0.002, tol=1e-11, m_max=5)
        with pytest.warns(UserWarning):
            # a tiny out-of-span component appears before the spans grow
            sol = solve(prob, cfg)
        ref = integral_reference(prob, np.array([0.0, 1.0]))[-1]
        X = reconstruct_dense(sol, len(sol.times) - 1)
        assert np.linalg.norm(X - ref) <= 1e-5 * np.linalg.norm(ref)

    def test_convergence_small_example1(self):
        prob = make_preset("example1", n0=6, seed=1)
        for method in ("exp", "bdf1", "ros2"):
            cfg = SolverConfig(method=method, tol=1e-9, m_max=12, h=0.01)
            sol = solve(prob, cfg)
            assert sol.converged, method
            assert sol.residual_history[-1] < 1e-9
            assert len(sol.residual_history) == sol.m_final

    def test_error_vs_reference(self):
        prob = make_preset("example1", n0=5, seed=2)
        cfg = SolverConfig(method="exp", tol=1e-10, m_max=12)
        sol = solve(prob, cfg)
        ref = integral_reference(prob, sol.times)
        X = reconstruct_dense(sol, len(sol.times) - 1)
        rel = np.linalg.norm(X - ref[-1]) / np.linalg.norm(ref[-1])
        assert rel <= 1e-6

    def test_two_norm_stopping(self):
        prob = make_preset("example1", n0=6, seed=3)
        sol = solve(prob, SolverConfig(method="exp", tol=1e-8, norm="two", m_max=12))
        assert sol.converged
        assert sol.residuals.two_norm.max() < 1e-8


class TestSolutionContracts:
    def test_residual_history_recompute(self):
        prob = make_preset("example1", n0=6, seed=4)
        sol = solve(prob, SolverConfig(method="exp", tol=1e-9, m_max=12))
        norms = residual_norms(sol.traj, sol.proj)
        assert sol.residual_history[-1] == pytest.approx(
            float(norms.frobenius.max()), rel=1e-15
        )

    def test_factor_column_counts_match(self):
        prob = make_preset("example1", n0=6, seed=5)
        sol = solve(prob, SolverConfig(method="exp", tol=1e-9, m_max=12))
        for ZA, ZB in sol.factors:
            assert ZA.shape[1] == ZB.shape[1]

    def test_factors_match_projected_solution(self):
        prob = make_preset("example1", n0=6, seed=6)
        cfg = SolverConfig(method="exp", tol=1e-9, m_max=12, dtol=1e-12)
        sol = solve(prob, cfg)
        k = len(sol.times) - 1
        dense = reconstruct_dense(sol, k)
        lifted = sol.decompA.Vm @ sol.traj.G[k] @ sol.decompB.Vm.T
        sigma = np.linalg.svd(sol.traj.G[k], compute_uv=False)
        dropped = sigma[sigma <= cfg.dtol]
        tol = dropped[0] if dropped.size else 1e-12
        assert np.linalg.norm(dense - lifted, 2) <= tol + 1e-12

    def test_rank_one_outer_product(self):
        u = np.array([[1.0], [2.0]])
        v = np.array([[3.0], [4.0], [5.0]])
        ZA, ZB = truncate_factorize(
            np.array([[1.0]]), u, v, dtol=0.0
        )
        assert np.allclose(ZA @ ZB.T, u @ v.T)

    def test_reconstruct_guard(self):
        class Dummy:
            factors = [(np.zeros((2000, 1)), np.zeros((2000, 1)))]

        with pytest.raises(SizeGuardError):
            reconstruct_dense(Dummy(), 0)

    def test_basis_reuse_prefix(self):
        # the driver's incremental bases match fresh decompositions per m
        prob = make_preset("example1", n0=6, seed=7)
        sol = solve(prob, SolverConfig(method="exp", tol=1e-9, m_max=10))
        m = sol.decompA.m
        fresh = extended_block_arnoldi(prob.A, prob.E, m)
        assert np.array_equal(sol.decompA.basis, fresh.basis)
        for mm in range(1, m):
            partial = extended_block_arnoldi(prob.A, prob.E, mm)
            cols = partial.basis.shape[1]
            assert np.array_equal(partial.basis, sol.decompA.basis[:, :cols])

    def test_nonconvergence_flagged(self):
        prob = make_preset("example1", n0=8, seed=8)
        sol = solve(prob, SolverConfig(method="exp", tol=1e-14, m_max=2))
        assert not sol.converged
        assert sol.m_final == 2
        assert len(sol.residual_history) == 2


def test_breakdown_treated_as_final():
    # n small: extended basis exhausts the space before m_max
    n = 12
    A = SparseOperator(seeded_matrix(60, n, shift=-4.0))
    B = SparseOperator(seeded_matrix(61, n, shift=-4.0))
    E = seeded_matrix(62, n, 2)
    F = seeded_matrix(63, n, 2)
    prob = DSEProblem(A=A, B=B, E=E, F=F, t0=0.0, Tf=1.0)
    sol = solve(prob, SolverConfig(method="exp", tol=1e-13, m_max=3))
    assert sol.decompA.breakdown or sol.decompA.m == 3
    assert sol.converged  # full space: residual collapses to zero

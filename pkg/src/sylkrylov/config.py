"""Centralized numerical tolerances for the dense kernels and solvers."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """All kernel tolerances in one record.

    Attributes
    ----------
    rank_tol
        A QR diagonal entry below ``rank_tol * ||M||_F`` signals rank
        deficiency.
    sylvester_pivot_tol
        A Bartels-Stewart diagonal solve pivot below
        ``sylvester_pivot_tol * (||left||_F + ||right||_F)`` signals a
        spectral clash.
    sparse_pivot_tol
        Pivot threshold for the sparse LU used by operator solves.
    ortho_tol
        Target orthogonality level for Krylov bases.
    extremal_eig_tol
        Convergence tolerance of the sparse extremal eigenvalue iteration
        used for logarithmic norms of large operators.
    """

    rank_tol: float = 1e-12
    sylvester_pivot_tol: float = 1e-13
    sparse_pivot_tol: float = 1e-14
    ortho_tol: float = 1e-10
    extremal_eig_tol: float = 1e-8


DEFAULT_TOLERANCES = Tolerances()

"""Krylov projection solvers for large-scale differential Sylvester
matrix equations with a low-rank constant term."""

from .bounds import (
    BoundReport,
    bound_alpha,
    bound_beta,
    bound_gamma,
    bound_global,
    compute_bound_report,
    exp_error_bound,
    lognorm2_sparse,
    nu_sparse,
    perturbation_check,
)
from .dense import expm, lognorm2, nu, qr_reduced, real_schur, svd
from .driver import DSEProblem, LowRankSolution, SolverConfig, reconstruct_dense, solve
from .integrators import (
    BDFSpec,
    ROS2Spec,
    solve_bdf,
    solve_exp_quadrature,
    solve_ros2,
    truncate_factorize,
    uniform_grid,
)
from .krylov import (
    BlockArnoldiBuilder,
    BlockKrylovDecomposition,
    ExtendedBlockArnoldiBuilder,
    block_arnoldi,
    extended_block_arnoldi,
)
from .problems import (
    FDOperatorSpec,
    fd_operator,
    integral_reference,
    kronecker_oracle,
    make_preset,
    random_low_rank,
)
from .projection import (
    ProjectedDSE,
    ProjectedTrajectory,
    ResidualNorms,
    assemble_residual_explicit,
    project,
    residual_norms,
)
from .quadrature import QuadratureSpec
from .sparse import SparseOperator, load_operator, read_matrix_market
from .sylvester import SylvesterSystem, bartels_stewart, kron_solve

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

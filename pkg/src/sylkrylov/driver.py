"""Outer solver loop: grow the Krylov bases, integrate the projected
equation, test the residual, emit low-rank factors.

Both subspaces grow in lockstep (one block per side and outer step); the
projected problem is re-integrated from scratch at every step, which is
the simple and robust choice at the problem sizes this library targets.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SizeGuardError, SylKrylovError, UnsupportedInputError
from .integrators import (
    BDFSpec,
    ROS2Spec,
    solve_bdf,
    solve_exp_quadrature,
    solve_ros2,
    truncate_factorize,
    uniform_grid,
)
from .krylov import BlockArnoldiBuilder, ExtendedBlockArnoldiBuilder
from .projection import project, residual_norms
from .quadrature import QuadratureSpec

RECONSTRUCT_GUARD = 10**6

METHODS = ("exp", "bdf1", "bdf2", "bdf3", "ros2")
BASIS_FLAVORS = ("ba", "eba")
NORM_CHOICES = ("fro", "two")


@dataclass
class DSEProblem:
    """Problem data of ``dX/dt = A X + X B + sign * E F^T``, ``X(t0) = X0``
    with the initial value in factored form ``X0 = Z0 @ Z0t.T``."""

    A: object
    B: object
    E: np.ndarray
    F: np.ndarray
    t0: float
    Tf: float
    Z0: np.ndarray | None = None
    Z0t: np.ndarray | None = None
    sign: float = 1.0
    name: str = ""
    strict: bool = True

    def __post_init__(self):
        self.E = np.atleast_2d(np.asarray(self.E, dtype=float))
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if self.E.shape[0] != self.A.n:
            raise ValueError("E must have as many rows as A")
        if self.F.shape[0] != self.B.n:
            raise ValueError("F must have as many rows as B")
        if self.E.shape[1] != self.F.shape[1] or self.E.shape[1] < 1:
            raise ValueError("E and F need the same column count s >= 1")
        if not self.t0 < self.Tf:
            raise ValueError("need t0 < Tf")
        if self.sign not in (-1.0, 1.0):
            raise ValueError("sign must be +1 or -1")
        if (self.Z0 is None) != (self.Z0t is None):
            raise ValueError("give both initial factors or neither")
        if self.Z0 is not None:
            self.Z0 = np.atleast_2d(np.asarray(self.Z0, dtype=float))
            self.Z0t = np.atleast_2d(np.asarray(self.Z0t, dtype=float))
            if self.Z0.shape[0] != self.A.n or self.Z0t.shape[0] != self.B.n:
                raise ValueError("initial factor row counts must match A and B")
            if self.Z0.shape[1] != self.Z0t.shape[1]:
                raise ValueError("initial factors need equal column counts")
        if self.strict:
            for name, block in (("E", self.E), ("F", self.F)):
                sv = np.linalg.svd(block, compute_uv=False)
                if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
                    raise ValueError(
                        f"{name} is (numerically) rank deficient; build the "
                        "problem with strict=False to allow this"
                    )

    @property
    def n(self):
        return self.A.n

    @property
    def p(self):
        return self.B.n

    @property
    def s(self):
        return self.E.shape[1]

    def initial_factors(self):
        if self.Z0 is None:
            return np.zeros((self.n, 0)), np.zeros((self.p, 0))
        return self.Z0, self.Z0t

    @property
    def x0_is_zero(self):
        Z0, Z0t = self.initial_factors()
        return Z0.shape[1] == 0 or not (np.any(Z0) and np.any(Z0t))

    def initial_value_dense(self):
        Z0, Z0t = self.initial_factors()
        if Z0.shape[1] == 0:
            return np.zeros((self.n, self.p))
        return Z0 @ Z0t.T


@dataclass
class SolverConfig:
    """Method, basis flavor and stopping data of one solver run."""

    method: str = "exp"
    basis: str = "eba"
    tol: float = 1e-10
    m_max: int = 30
    dtol: float = 1e-12
    h: float = 0.01
    grid_points: int = 21
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    gamma: float | None = None
    norm: str = "fro"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {', '.join(METHODS)}")
        if self.basis not in BASIS_FLAVORS:
            raise ValueError(f"basis must be one of {', '.join(BASIS_FLAVORS)}")
        if self.norm not in NORM_CHOICES:
            raise ValueError(f"norm must be one of {', '.join(NORM_CHOICES)}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if self.dtol < 0:
            raise ValueError("dtol must be nonnegative")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")

    def build_grid(self, t0, tf):
        if self.method == "exp":
            return np.linspace(t0, tf, self.grid_points)
        return uniform_grid(t0, tf, self.h)


@dataclass
class LowRankSolution:
    """Factored solution with the per-step residual history."""

    times: np.ndarray
    factors: list  # (ZA_k, ZB_k) per grid time
    residual_history: list
    m_final: int
    converged: bool
    decompA: object = None
    decompB: object = None
    proj: object = None
    traj: object = None
    residuals: object = None

    def factor_rank(self, time_index):
        return self.factors[time_index][0].shape[1]


def _integrate(proj, config, Y0):
    grid = config.build_grid(proj.t0, proj.Tf)
    if config.method == "exp":
        return solve_exp_quadrature(proj, grid, config.quad, Y0=Y0)
    if config.method.startswith("bdf"):
        spec = BDFSpec(order=int(config.method[3:]), step=config.h)
        return solve_bdf(proj, Y0, spec, grid)
    gamma = ROS2Spec().gamma if config.gamma is None else config.gamma
    return solve_ros2(proj, Y0, ROS2Spec(step=config.h, gamma=gamma), grid)


def _zero_solution(problem, config):
    grid = config.build_grid(problem.t0, problem.Tf)
    empty = [
        (np.zeros((problem.n, 0)), np.zeros((problem.p, 0))) for _ in grid
    ]
    return LowRankSolution(
        times=grid,
        factors=empty,
        residual_history=[0.0],
        m_final=1,
        converged=True,
    )


def solve(problem, config):
    """Run the outer iteration until the max-over-grid residual norm of
    the chosen flavor drops below ``config.tol`` or ``m_max`` is reached.

    Returns a :class:`LowRankSolution`; ``converged`` is False when the
    tolerance was not met (the best trajectory is still returned).
    """
    if config.method == "exp" and not problem.x0_is_zero:
        raise UnsupportedInputError(
            "the exponential-quadrature route requires X(t0) = 0"
        )
    if not (np.any(problem.E) and np.any(problem.F)) and problem.x0_is_zero:
        # Zero constant term and zero start: the solution is identically 0.
        return _zero_solution(problem, config)

    builder_cls = (
        ExtendedBlockArnoldiBuilder if config.basis == "eba" else BlockArnoldiBuilder
    )
    try:
        builderA = builder_cls(problem.A, problem.E)
        builderB = builder_cls(problem.B.T, problem.F)
    except SylKrylovError as exc:
        raise type(exc)(f"basis construction failed at m=1: {exc}") from exc

    Z0, Z0t = problem.initial_factors()
    history = []
    converged = False
    decompA = decompB = proj = traj = norms = None
    prev_steps = (0, 0)
    for m in range(1, config.m_max + 1):
        try:
            grewA = builderA.step()
            grewB = builderB.step()
        except SylKrylovError as exc:
            raise type(exc)(f"basis extension failed at m={m}: {exc}") from exc
        exhausted = not (grewA and grewB)
        if (builderA.m, builderB.m) == prev_steps:
            break  # neither side advanced; the last evaluation stands
        prev_steps = (builderA.m, builderB.m)
        decompA = builderA.decomposition()
        decompB = builderB.decomposition()
        if decompA.m == 0 or decompB.m == 0:
            raise UnsupportedInputError("basis breakdown before the first block")
        proj = project(
            decompA, decompB, problem.E, problem.F,
            (problem.t0, problem.Tf), problem.sign,
        )
        Y0 = None
        if not problem.x0_is_zero:
            Y0 = (decompA.Vm.T @ Z0) @ (decompB.Vm.T @ Z0t).T
            _warn_unprojected_x0(problem, decompA, decompB, m)
        traj = _integrate(proj, config, Y0)
        norms = residual_norms(traj, proj)
        value = norms.max_norm(config.norm)
        history.append(value)
        if value < config.tol:
            converged = True
            break
        if exhausted:
            # Breakdown on either side: the truncated basis is final.
            break

    factors = [
        truncate_factorize(Gk, decompA.Vm, decompB.Vm, config.dtol)
        for Gk in traj.G
    ]
    return LowRankSolution(
        times=traj.times.copy(),
        factors=factors,
        residual_history=history,
        m_final=max(decompA.m, decompB.m),
        converged=converged,
        decompA=decompA,
        decompB=decompB,
        proj=proj,
        traj=traj,
        residuals=norms,
    )


def _warn_unprojected_x0(problem, decompA, decompB, m):
    Z0, Z0t = problem.initial_factors()
    CA = decompA.Vm.T @ Z0
    CB = decompB.Vm.T @ Z0t
    gram = (Z0.T @ Z0) @ (Z0t.T @ Z0t)
    cross = (CA.T @ CA) @ (CB.T @ CB)
    norm_x0_sq = float(np.trace(gram))
    norm_proj_sq = float(np.trace(cross))
    leftover = max(0.0, norm_x0_sq - norm_proj_sq)
    if leftover > 1e-24 * max(1.0, norm_x0_sq):
        warnings.warn(
            f"m={m}: component of X0 outside the projection spaces ignored "
            f"(norm ~ {np.sqrt(leftover):.3e})",
            stacklevel=3,
        )


def reconstruct_dense(solution, time_index):
    """Dense ``ZA @ ZB.T`` at one grid time (inspection only; guarded)."""
    ZA, ZB = solution.factors[time_index]
    if ZA.shape[0] * ZB.shape[0] > RECONSTRUCT_GUARD:
        raise SizeGuardError(
            f"dense reconstruction guard: {ZA.shape[0]}*{ZB.shape[0]} > {RECONSTRUCT_GUARD}"
        )
    if ZA.shape[1] == 0:
        return np.zeros((ZA.shape[0], ZB.shape[0]))
    return ZA @ ZB.T

"""Integrators for the projected differential Sylvester equation.

Three routes produce a :class:`~sylkrylov.projection.ProjectedTrajectory`:

* exponential quadrature of the closed-form integral (zero initial value
  only),
* BDF of order 1..3, each step solved as a small Sylvester equation,
* the two-stage linearly implicit ROS(2) scheme.

``truncate_factorize`` turns a small solution matrix into low-rank
factors of the lifted approximation via a truncated SVD.
"""

from dataclasses import dataclass, field

import numpy as np

from .dense import expm, svd
from .exceptions import UnsupportedInputError
from .projection import ProjectedTrajectory
from .quadrature import QuadratureSpec, panel_nodes
from .sylvester import SchurSylvesterSolver

# Table of p-step BDF coefficients (beta, (alpha_0, ..., alpha_{p-1})).
BDF_COEFFS = {
    1: (1.0, (1.0,)),
    2: (2.0 / 3.0, (4.0 / 3.0, -1.0 / 3.0)),
    3: (6.0 / 11.0, (18.0 / 11.0, -9.0 / 11.0, 2.0 / 11.0)),
}

ROS2_GAMMA_DEFAULT = 1.0 + 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class BDFSpec:
    """Order and step size of the BDF integrator."""

    order: int = 1
    step: float = 0.01

    def __post_init__(self):
        if self.order not in BDF_COEFFS:
            raise ValueError(f"BDF order must be in {sorted(BDF_COEFFS)}")
        if self.step <= 0:
            raise ValueError("step must be positive")

    @property
    def coefficients(self):
        return BDF_COEFFS[self.order]


@dataclass(frozen=True)
class ROS2Spec:
    """Step size and stabilization parameter of the ROS(2) scheme.

    ``gamma = 1 + 1/sqrt(2)`` makes the scheme L-stable at order 2.
    """

    step: float = 0.01
    gamma: float = ROS2_GAMMA_DEFAULT

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def uniform_grid(t0, tf, h):
    """Uniform grid from ``t0`` with step ``h``; the last step is
    shortened to land exactly on ``tf``."""
    if not tf > t0:
        raise ValueError("need tf > t0")
    if h <= 0:
        raise ValueError("h must be positive")
    span = tf - t0
    n = int(np.ceil(span / h - 1e-12))
    times = t0 + h * np.arange(n + 1)
    times[-1] = tf
    if n > 1 and times[-1] - times[-2] < 1e-12 * h:
        times = np.delete(times, -2)
    return times


def _check_grid(proj, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid needs at least two times")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if abs(grid[0] - proj.t0) > 1e-12 * max(1.0, abs(proj.t0)):
        raise ValueError(f"grid must start at t0 = {proj.t0}")
    return grid


def solve_exp_quadrature(proj, grid, quad=None, Y0=None):
    """Evaluate the closed-form solution of the projected equation by
    composite Gauss-Legendre quadrature.

    After the substitution ``u = t - tau`` the integrand
    ``exp(u TA) @ C @ exp(u TB).T`` does not depend on the output time, so
    the values at successive grid times accumulate panel by panel.  Each
    grid interval is split into ``quad.substeps`` panels with
    ``quad.nodes_per_interval`` nodes; exponentials are evaluated per
    node.

    Only the zero initial value is supported on this route.
    """
    grid = _check_grid(proj, grid)
    if quad is None:
        quad = QuadratureSpec()
    if Y0 is not None and np.any(np.asarray(Y0) != 0.0):
        raise UnsupportedInputError(
            "exponential quadrature requires a zero initial value; "
            "use the BDF or ROS(2) route for nonzero starting data"
        )
    qa, qb = proj.TA.shape[0], proj.TB.shape[0]
    C_sign = proj.sign
    G = [np.zeros((qa, qb))]
    if not np.any(proj.Em) or not np.any(proj.Fm):
        for _ in range(len(grid) - 1):
            G.append(np.zeros((qa, qb)))
        return ProjectedTrajectory.from_solution(grid, G, proj.dA)
    acc = np.zeros((qa, qb))
    t0 = grid[0]
    for k in range(len(grid) - 1):
        nodes, weights = panel_nodes(grid[k] - t0, grid[k + 1] - t0, quad)
        for u, w in zip(nodes, weights):
            ZA = expm(u * proj.TA) @ proj.Em
            ZB = expm(u * proj.TB) @ proj.Fm
            acc = acc + (w * C_sign) * (ZA @ ZB.T)
        G.append(acc.copy())
    return ProjectedTrajectory.from_solution(grid, G, proj.dA)


def solve_bdf(proj, Y0, spec, grid):
    """Integrate the projected equation with BDF(p).

    Each step solves ``(h b TA - I/2) Y + Y (h b TB - I/2).T + C = 0``
    with ``C = h b * rhs + sum_i alpha_i Y_{k-i}``; the Schur
    factorizations of the constant coefficient matrices are reused across
    steps.  The multistep history ramps up through the lower orders
    (p = 1, then 2, ...), and an irregular final step falls back to
    order 1.
    """
    grid = _check_grid(proj, grid)
    qa, qb = proj.TA.shape[0], proj.TB.shape[0]
    Y0 = np.zeros((qa, qb)) if Y0 is None else np.array(Y0, dtype=float)
    if Y0.shape != (qa, qb):
        raise ValueError(f"Y0 must be {qa} x {qb}")
    steps = np.diff(grid)
    h = spec.step
    if np.any(np.abs(steps[:-1] - h) > 1e-10 * max(1.0, h)):
        raise ValueError("grid spacing must equal spec.step (except the last step)")
    rhs0 = proj.rhs_term()
    solvers = {}
    history = [Y0]
    G = [Y0.copy()]
    for k, hk in enumerate(steps):
        regular = abs(hk - h) <= 1e-10 * max(1.0, h)
        order = min(spec.order, len(history)) if regular else 1
        beta, alphas = BDF_COEFFS[order]
        key = (order, round(hk / h, 12))
        if key not in solvers:
            solvers[key] = SchurSylvesterSolver(
                hk * beta * proj.TA - 0.5 * np.eye(qa),
                hk * beta * proj.TB - 0.5 * np.eye(qb),
            )
        C = hk * beta * rhs0
        for a, Yprev in zip(alphas, history):
            C = C + a * Yprev
        Ynew = solvers[key].solve(C)
        history.insert(0, Ynew)
        del history[spec.order :]
        G.append(Ynew.copy())
    return ProjectedTrajectory.from_solution(grid, G, proj.dA)


def solve_ros2(proj, Y0, spec, grid):
    """Integrate the projected equation with the two-stage ROS(2) scheme.

    Per step, the stages solve

        TtA K1 + K1 TtB = -F(Y_k)
        TtA K2 + K2 TtB = -F(Y_k + K1) + (2/h) K1

    with ``TtA = gamma TA - I/(2h)`` and ``TtB = gamma TB.T - I/(2h)``,
    and update ``Y_{k+1} = Y_k + (3/2) K1 + (1/2) K2``.
    """
    grid = _check_grid(proj, grid)
    qa, qb = proj.TA.shape[0], proj.TB.shape[0]
    Y0 = np.zeros((qa, qb)) if Y0 is None else np.array(Y0, dtype=float)
    if Y0.shape != (qa, qb):
        raise ValueError(f"Y0 must be {qa} x {qb}")
    steps = np.diff(grid)
    h = spec.step
    if np.any(np.abs(steps[:-1] - h) > 1e-10 * max(1.0, h)):
        raise ValueError("grid spacing must equal spec.step (except the last step)")

    def rhs(Y):
        return proj.ode_rhs(Y)

    solvers = {}
    Y = Y0.copy()
    G = [Y0.copy()]
    for hk in steps:
        key = round(hk / h, 12)
        if key not in solvers:
            solvers[key] = SchurSylvesterSolver(
                spec.gamma * proj.TA - np.eye(qa) / (2.0 * hk),
                spec.gamma * proj.TB - np.eye(qb) / (2.0 * hk),
            )
        solver = solvers[key]
        K1 = solver.solve(rhs(Y))
        K2 = solver.solve(rhs(Y + K1) - (2.0 / hk) * K1)
        Y = Y + 1.5 * K1 + 0.5 * K2
        G.append(Y.copy())
    return ProjectedTrajectory.from_solution(grid, G, proj.dA)


def truncate_factorize(G, basisA, basisB, dtol):
    """Low-rank factors of ``basisA @ G @ basisB.T`` by truncated SVD.

    Keeps the singular values strictly greater than ``dtol`` and splits
    them symmetrically between the factors; the dropped part has 2-norm
    at most the first discarded singular value.
    """
    if dtol < 0:
        raise ValueError("dtol must be nonnegative")
    G = np.atleast_2d(np.asarray(G, dtype=float))
    U, sigma, V = svd(G)
    keep = int(np.sum(sigma > dtol))
    if keep == 0:
        return (
            np.zeros((basisA.shape[0], 0)),
            np.zeros((basisB.shape[0], 0)),
        )
    root = np.sqrt(sigma[:keep])
    ZA = (basisA @ U[:, :keep]) * root[np.newaxis, :]
    ZB = (basisB @ V[:, :keep]) * root[np.newaxis, :]
    return ZA, ZB

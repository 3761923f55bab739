"""Test problems and independent reference solvers.

The convection-diffusion presets discretize

    L u = Laplace(u) - fx(x,y) du/dx + fy(x,y) du/dy + g(x,y) u

on the unit square with homogeneous Dirichlet boundary conditions by the
5-point stencil (centered differences for the convection terms), in
lexicographic node ordering with x running fastest.

Two mutually independent reference solvers are provided for desk-scale
verification: implicit Euler on the Kronecker-vectorized system, and
dense quadrature of the integral form of the exact solution.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .dense import expm
from .driver import DSEProblem
from .exceptions import SizeGuardError
from .quadrature import QuadratureSpec, panel_nodes
from .sparse import SparseOperator, load_operator

KRONECKER_GUARD = 40_000
INTEGRAL_GUARD = 400

DATA_DIR_ENV = "SYLKRYLOV_DATA_DIR"
RAIL_URL = "https://portal.uni-freiburg.de/imteksimulation/downloads/benchmark"

# Coefficient presets of the two convection-diffusion operators.
LA_COEFFS = dict(
    fx=lambda x, y: x + 10.0 * y**2,
    fy=lambda x, y: np.sqrt(2.0 * x**2 + y**2),
    g=lambda x, y: x**2 - y**2,
)
LB_COEFFS = dict(
    fx=lambda x, y: x + 2.0 * y,
    fy=lambda x, y: np.exp(y - x),
    g=lambda x, y: y**2 - x**2,
)


@dataclass
class FDOperatorSpec:
    """Inner grid size and coefficient functions of one operator."""

    n0: int
    fx: callable = field(default=lambda x, y: 0.0)
    fy: callable = field(default=lambda x, y: 0.0)
    g: callable = field(default=lambda x, y: 0.0)

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError("need at least 2 inner grid points per direction")

    @classmethod
    def preset(cls, name, n0):
        coeffs = {"LA": LA_COEFFS, "LB": LB_COEFFS}[name]
        return cls(n0=n0, **coeffs)


def fd_operator(spec):
    """5-point discretization of the convection-diffusion-reaction
    operator on the unit square; mesh width ``1/(n0+1)``."""
    n0 = spec.n0
    h = 1.0 / (n0 + 1)
    n = n0 * n0
    rows, cols, vals = [], [], []

    def node(ix, iy):
        return iy * n0 + ix

    for iy in range(n0):
        y = (iy + 1) * h
        for ix in range(n0):
            x = (ix + 1) * h
            k = node(ix, iy)
            fx = float(spec.fx(x, y))
            fy = float(spec.fy(x, y))
            rows.append(k)
            cols.append(k)
            vals.append(-4.0 / h**2 + float(spec.g(x, y)))
            if ix > 0:
                rows.append(k)
                cols.append(node(ix - 1, iy))
                vals.append(1.0 / h**2 + fx / (2.0 * h))
            if ix < n0 - 1:
                rows.append(k)
                cols.append(node(ix + 1, iy))
                vals.append(1.0 / h**2 - fx / (2.0 * h))
            if iy > 0:
                rows.append(k)
                cols.append(node(ix, iy - 1))
                vals.append(1.0 / h**2 - fy / (2.0 * h))
            if iy < n0 - 1:
                rows.append(k)
                cols.append(node(ix, iy + 1))
                vals.append(1.0 / h**2 + fy / (2.0 * h))
    return SparseOperator.from_triplets(n, rows, cols, vals)


def random_low_rank(n, p, s, seed):
    """Uniform [0, 1) low-rank term factors, reproducible from the seed.

    Uses the Philox 4x64 counter-based generator keyed by ``seed``;
    ``E`` (n x s) is drawn first, then ``F`` (p x s), both row-major.
    """
    if s > min(n, p):
        raise ValueError("s must not exceed min(n, p)")
    gen = np.random.Generator(np.random.Philox(key=seed))
    E = gen.random((n, s))
    F = gen.random((p, s))
    return E, F


def kronecker_oracle(problem, grid, h_inner):
    """Implicit Euler on the vectorized system
    ``x' = (I (x) A + B^T (x) I) x + vec(sign E F^T)``.

    ``I - h A_kron`` is factored once (the grid is stepped with equal
    substeps of size at most ``h_inner``).  Guarded to ``n p <= 40000``
    unknowns; returns one dense ``n x p`` matrix per grid time.
    """
    A, B = problem.A, problem.B
    n, p = A.n, B.n
    if n * p > KRONECKER_GUARD:
        raise SizeGuardError(f"kronecker oracle guard: {n}*{p} > {KRONECKER_GUARD}")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or abs(grid[0] - problem.t0) > 1e-12:
        raise ValueError("grid must increase from t0")
    big = (
        scipy.sparse.kron(scipy.sparse.identity(p), A.matrix)
        + scipy.sparse.kron(B.matrix.T, scipy.sparse.identity(n))
    ).tocsc()
    b = problem.sign * (problem.E @ problem.F.T).flatten(order="F")
    x = problem.initial_value_dense().flatten(order="F")
    out = [x.reshape((n, p), order="F").copy()]
    lu = None
    h_used = None
    for t_prev, t_next in zip(grid[:-1], grid[1:]):
        span = t_next - t_prev
        substeps = max(1, int(np.ceil(span / h_inner - 1e-12)))
        h = span / substeps
        if lu is None or abs(h - h_used) > 1e-14 * h_inner:
            lu = scipy.sparse.linalg.splu(
                (scipy.sparse.identity(n * p, format="csc") - h * big).tocsc()
            )
            h_used = h
        for _ in range(substeps):
            x = lu.solve(x + h * b)
        out.append(x.reshape((n, p), order="F").copy())
    return out


def integral_reference(problem, grid, quad=None):
    """Dense quadrature of the integral form of the exact solution:

        X(t) = e^{(t-t0)A} X0 e^{(t-t0)B}
             + sign * int_{t0}^t e^{(t-tau)A} E F^T e^{(t-tau)B} dtau.

    Uses the dense matrix exponential per quadrature node; guarded to
    ``n, p <= 400``.
    """
    A, B = problem.A, problem.B
    n, p = A.n, B.n
    if max(n, p) > INTEGRAL_GUARD:
        raise SizeGuardError(f"integral reference guard: n, p <= {INTEGRAL_GUARD}")
    if quad is None:
        quad = QuadratureSpec()
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or abs(grid[0] - problem.t0) > 1e-12:
        raise ValueError("grid must increase from t0")
    Ad = A.to_dense()
    Bd = B.to_dense()
    E, F = problem.E, problem.F
    t0 = problem.t0
    Z0, Z0t = problem.initial_factors()
    have_x0 = Z0.shape[1] > 0

    acc = np.zeros((n, p))
    out = []
    for k, t in enumerate(grid):
        if k > 0:
            nodes, weights = panel_nodes(grid[k - 1] - t0, t - t0, quad)
            for u, w in zip(nodes, weights):
                ZA = expm(u * Ad) @ E
                ZB = expm(u * Bd.T) @ F
                acc = acc + (w * problem.sign) * (ZA @ ZB.T)
        Xk = acc.copy()
        if have_x0:
            span = t - t0
            Xk = Xk + (expm(span * Ad) @ Z0) @ (expm(span * Bd.T) @ Z0t).T
        out.append(Xk)
    return out


def _bundled_data(name):
    return Path(__file__).parent / "data" / name


def data_dir():
    """Directory searched for problem data files (env override)."""
    override = os.environ.get(DATA_DIR_ENV)
    return Path(override) if override else _bundled_data("")


def example1(n0=10, p0=None, s=2, seed=42, t0=0.0, tf=2.0):
    """Convection-diffusion pair on the unit square with random uniform
    low-rank term factors."""
    p0 = n0 if p0 is None else p0
    A = fd_operator(FDOperatorSpec.preset("LA", n0))
    B = fd_operator(FDOperatorSpec.preset("LB", p0))
    E, F = random_low_rank(A.n, B.n, s, seed)
    return DSEProblem(A=A, B=B, E=E, F=F, t0=t0, Tf=tf, name=f"example1(n0={n0},p0={p0})")


def example2(s=2, seed=42, t0=0.0, tf=2.0, path=None):
    """Steel-profile cooling benchmark: ``dX/dt = A X + X A - E F^T``.

    Expects ``rail1357.mtx`` in the data directory (not bundled; download
    the Rail benchmark matrix from the IMTEK collection and drop it
    there, or point SYLKRYLOV_DATA_DIR at it).
    """
    if path is None:
        path = data_dir() / "rail1357.mtx"
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(
            f"{path} not found; fetch the Rail1357 matrix from {RAIL_URL} "
            f"and place it there (or set {DATA_DIR_ENV})"
        )
    A = load_operator(path)
    E, F = random_low_rank(A.n, A.n, s, seed)
    return DSEProblem(
        A=A, B=A, E=E, F=F, t0=t0, Tf=tf, sign=-1.0, name="example2(rail1357)"
    )


def surrogate100(s=2, seed=42, t0=0.0, tf=2.0):
    """Bundled 100 x 100 symmetric negative definite stand-in for the
    file-based benchmark; same equation shape as :func:`example2`."""
    A = load_operator(_bundled_data("surrogate100.mtx"))
    E, F = random_low_rank(A.n, A.n, s, seed)
    return DSEProblem(
        A=A, B=A, E=E, F=F, t0=t0, Tf=tf, sign=-1.0, name="surrogate100"
    )


PRESETS = {
    "example1": example1,
    "example2": example2,
    "surrogate100": surrogate100,
}


def make_preset(name, **kwargs):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return factory(**kwargs)

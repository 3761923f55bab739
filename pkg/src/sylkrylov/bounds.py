"""A-posteriori error bounds for the Krylov-projected approximations.

All bounds are driven by logarithmic norms of the large operators (the
growth rates ``||exp(t A)||_2 <= exp(t mu2(A))``) combined with residual
or coupling-block information from the small projected quantities.  The
dense-oracle variants (true factor errors, explicit residuals) exist for
verification at desk scale only.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .config import DEFAULT_TOLERANCES
from .dense import expm
from .exceptions import SizeGuardError, UnsupportedInputError
from .projection import assemble_residual_explicit, residual_norms
from .quadrature import QuadratureSpec, panel_nodes

DENSE_EIG_CUTOFF = 400
DENSE_ORACLE_GUARD = 400


def lognorm2_sparse(op, tol=None):
    """2-logarithmic norm of a sparse operator.

    Largest eigenvalue of ``(A + A.T)/2`` by a Lanczos extremal
    eigenvalue iteration (dense solve below a size cutoff).
    """
    return _extremal_sym_eig(op, largest=True, tol=tol) * 0.5


def nu_sparse(op, tol=None):
    """Smallest eigenvalue of ``(A + A.T)/2`` for a sparse operator."""
    return _extremal_sym_eig(op, largest=False, tol=tol) * 0.5


def _extremal_sym_eig(op, largest, tol):
    """Extremal eigenvalue of ``A + A.T`` (note: not halved here)."""
    if tol is None:
        tol = DEFAULT_TOLERANCES.extremal_eig_tol
    sym = (op.matrix + op.matrix.T).tocsr()
    n = sym.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        eigs = np.linalg.eigvalsh(sym.toarray())
        return float(eigs[-1] if largest else eigs[0])
    which = "LA" if largest else "SA"
    vals = scipy.sparse.linalg.eigsh(
        sym, k=1, which=which, tol=tol, return_eigenvectors=False
    )
    return float(vals[0])


def alpha_m(traj, proj, t=None):
    """Max over the trajectory grid of the residual 2-norm up to time ``t``."""
    norms = residual_norms(traj, proj)
    mask = _grid_mask(norms.times, proj.t0, t)
    return float(np.max(norms.two_norm[mask]))


def beta_m(traj, proj, t=None):
    """Coupling-norm variant: max tail-slice norm times the summed
    coupling-block norms (always at least :func:`alpha_m`)."""
    coupling = np.linalg.norm(proj.TnextA, 2) + np.linalg.norm(proj.TnextB, 2)
    mask = _grid_mask(traj.times, proj.t0, t)
    tail = 0.0
    for k in np.nonzero(mask)[0]:
        Gk = traj.G[k]
        rows = np.linalg.norm(Gk[-proj.dA :, :], 2)
        cols = np.linalg.norm(Gk[:, -proj.dB :], 2)
        tail = max(tail, rows, cols)
    return float(tail * coupling)


def _grid_mask(times, t0, t):
    if t is None:
        return np.ones(len(times), dtype=bool)
    mask = times <= t + 1e-12 * max(1.0, abs(t))
    if not np.any(mask):
        raise ValueError(f"no grid times at or below t = {t}")
    return mask


def _growth_bound(rate_sum, span, coeff, E0_norm):
    if abs(rate_sum) < 1e-14:
        raise UnsupportedInputError(
            "mu2(A) + mu2(B) vanishes; the alpha/beta bounds are undefined"
        )
    grow = np.exp(span * rate_sum)
    return float(E0_norm * grow + coeff * (grow - 1.0) / rate_sum)


def bound_alpha(proj, traj, mu2A, mu2B, t=None, E0_norm=0.0):
    """Error bound from the max residual 2-norm over the grid:

        ||E_m(t)|| <= ||E_m0|| e^{(t-t0) mu} + alpha_m (e^{(t-t0) mu} - 1)/mu

    with ``mu = mu2(A) + mu2(B)`` (required nonzero).
    """
    t = proj.Tf if t is None else t
    a = alpha_m(traj, proj, t)
    return _growth_bound(mu2A + mu2B, t - proj.t0, a, E0_norm)


def bound_beta(proj, traj, mu2A, mu2B, t=None, E0_norm=0.0):
    """Same growth bound with :func:`beta_m` in place of ``alpha_m``."""
    t = proj.Tf if t is None else t
    b = beta_m(traj, proj, t)
    return _growth_bound(mu2A + mu2B, t - proj.t0, b, E0_norm)


def tail_exponential_action(T, Em, d, u):
    """``L(u)``: last ``d`` rows of ``exp(u T) @ Em``."""
    return (expm(u * T) @ Em)[-d:, :]


def exp_error_bound(
    decomp, Em, t, tau_grid, mu2, quad=None, t0=0.0, drop_exponential=False
):
    """Per-``tau`` bound on the exponential-action approximation error
    ``||exp((t-tau) A) E - Vm exp((t-tau) T) Em||_2``.

    The bound integrates the tail of the small exponential action against
    the growth factor of the operator:

        ||e_m(tau)|| <= ||T_next|| * int_tau^t e^{(u-tau) mu2} ||L(u)|| du,

    where ``L(u)`` is the last block row of ``exp((t-u) T) @ Em``.  It
    vanishes at ``tau = t`` together with the true error, and at
    ``tau = t0`` covers the whole propagation window.  With
    ``drop_exponential`` the weight is replaced by 1, which keeps the
    bound valid (and cheaper) whenever ``mu2 <= 0``.
    """
    if quad is None:
        quad = QuadratureSpec()
    coupling = np.linalg.norm(decomp.T_next, 2)
    d = decomp.block_width
    out = np.zeros(len(tau_grid))
    if coupling == 0.0:
        return out
    for i, tau in enumerate(tau_grid):
        if tau < t0 - 1e-12 or tau > t + 1e-12:
            raise ValueError(f"tau = {tau} outside [{t0}, {t}]")
        if t - tau <= 1e-14 * max(1.0, abs(t)):
            continue
        nodes, weights = panel_nodes(tau, t, quad)
        total = 0.0
        for u, w in zip(nodes, weights):
            lnorm = np.linalg.norm(
                tail_exponential_action(decomp.T, Em, d, t - u), 2
            )
            factor = 1.0 if drop_exponential else np.exp((u - tau) * mu2)
            total += w * factor * lnorm
        out[i] = coupling * total
    return out


def true_factor_errors(op, decomp, E, t, tau_grid, t0=0.0):
    """Dense oracle: ``||exp((t-tau) A) E - Vm exp((t-tau) T) Em||_2``
    per ``tau``.  Guarded to operators of dimension <= 400."""
    if op.n > DENSE_ORACLE_GUARD:
        raise SizeGuardError(f"dense factor-error oracle guard: n = {op.n}")
    A = op.to_dense()
    E = np.atleast_2d(np.asarray(E, dtype=float))
    Vm = decomp.Vm
    Em = Vm.T @ E
    out = np.empty(len(tau_grid))
    for i, tau in enumerate(tau_grid):
        span = t - tau
        exact = expm(span * A) @ E
        approx = Vm @ (expm(span * decomp.T) @ Em)
        out[i] = np.linalg.norm(exact - approx, 2)
    return out


def bound_gamma(A, B, decompA, decompB, E, F, t, mu2A, mu2B, quad=None, t0=0.0):
    """Factor-error bound (test mode: uses the dense factor-error oracle):

        ||E_m(t)|| <= ||F|| int e^{(t-tau) mu2(B)} ||eA(tau)|| dtau
                    + ||Em|| int e^{(t-tau) mu2(A)} ||eB(tau)|| dtau.
    """
    if quad is None:
        quad = QuadratureSpec()
    E = np.atleast_2d(np.asarray(E, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Em = decompA.Vm.T @ E
    nodes, weights = panel_nodes(t0, t, quad)
    errsA = true_factor_errors(A, decompA, E, t, nodes, t0)
    errsB = true_factor_errors(B, decompB, F, t, nodes, t0)
    termA = np.linalg.norm(F, 2) * np.sum(
        weights * np.exp((t - nodes) * mu2B) * errsA
    )
    termB = np.linalg.norm(Em, 2) * np.sum(
        weights * np.exp((t - nodes) * mu2A) * errsB
    )
    return float(termA + termB)


def bound_global(proj, t, mu2A, mu2B, quad=None):
    """Computable global bound: the factor errors inside
    :func:`bound_gamma` are replaced by their exponential-action bounds,
    so only small quantities enter (production mode)."""
    if quad is None:
        quad = QuadratureSpec()
    t0 = proj.t0
    nodes, weights = panel_nodes(t0, t, quad)

    def s_integral(T, Mm, d, coupling, mu2, tau):
        if coupling == 0.0 or t - tau <= 1e-14 * max(1.0, abs(t)):
            return 0.0
        inner_nodes, inner_w = panel_nodes(tau, t, quad)
        total = 0.0
        for u, w in zip(inner_nodes, inner_w):
            lnorm = np.linalg.norm(tail_exponential_action(T, Mm, d, t - u), 2)
            total += w * np.exp((u - tau) * mu2) * lnorm
        return coupling * total

    coupA = np.linalg.norm(proj.TnextA, 2)
    coupB = np.linalg.norm(proj.TnextB, 2)
    sA = np.array(
        [s_integral(proj.TA, proj.Em, proj.dA, coupA, mu2A, tau) for tau in nodes]
    )
    sB = np.array(
        [s_integral(proj.TB, proj.Fm, proj.dB, coupB, mu2B, tau) for tau in nodes]
    )
    termA = np.linalg.norm(proj.Fm, 2) * np.sum(
        weights * np.exp((t - nodes) * mu2B) * sA
    )
    termB = np.linalg.norm(proj.Em, 2) * np.sum(
        weights * np.exp((t - nodes) * mu2A) * sB
    )
    return float(termA + termB)


def perturbation_check(A, B, E, F, decompA, decompB, traj, time_index=-1, sign=1.0):
    """Defect of the perturbed-equation identity
    ``R = -(F_A X + X F_B)`` with the rank-``d`` perturbations
    ``F_A = V_{m+1} TnextA V_m.T`` and ``F_B = W_m TnextB.T W_{m+1}.T``.

    Returns ``||R + F_A X + X F_B||_F``; desk-scale oracle.
    """
    R, _ = assemble_residual_explicit(
        A, B, E, F, decompA, decompB, traj, time_index, sign
    )
    G = traj.G[time_index]
    dA, dB = decompA.block_width, decompB.block_width
    Vm, Wm = decompA.Vm, decompB.Vm
    X = Vm @ G @ Wm.T
    lastA = decompA.last_block
    lastB = decompB.last_block
    total = R.copy()
    if lastA is not None:
        Vlast = Vm[:, -dA:]
        total += lastA @ (decompA.T_next @ (Vlast.T @ X))
    if lastB is not None:
        Wlast = Wm[:, -dB:]
        total += ((X @ Wlast) @ decompB.T_next.T) @ lastB.T
    return float(np.linalg.norm(total))


@dataclass
class BoundReport:
    """All bound quantities evaluated at one time."""

    t: float
    mu2A: float
    mu2B: float
    alpha_m: float
    beta_m: float
    bound_alpha: float
    bound_beta: float
    bound_global: float
    E0_norm: float = 0.0
    bound_gamma: float | None = None


def compute_bound_report(
    proj,
    traj,
    mu2A,
    mu2B,
    t=None,
    E0_norm=0.0,
    quad=None,
    gamma_inputs=None,
):
    """Evaluate every bound at time ``t`` (default: the final time).

    ``gamma_inputs``, when given as ``(A, B, decompA, decompB, E, F)``,
    additionally evaluates the dense-oracle factor-error bound.
    """
    t = proj.Tf if t is None else t
    report = BoundReport(
        t=t,
        mu2A=mu2A,
        mu2B=mu2B,
        alpha_m=alpha_m(traj, proj, t),
        beta_m=beta_m(traj, proj, t),
        bound_alpha=bound_alpha(proj, traj, mu2A, mu2B, t, E0_norm),
        bound_beta=bound_beta(proj, traj, mu2A, mu2B, t, E0_norm),
        bound_global=bound_global(proj, t, mu2A, mu2B, quad),
        E0_norm=E0_norm,
    )
    if gamma_inputs is not None:
        A, B, decompA, decompB, E, F = gamma_inputs
        report.bound_gamma = bound_gamma(
            A, B, decompA, decompB, E, F, t, mu2A, mu2B, quad, t0=proj.t0
        )
    return report

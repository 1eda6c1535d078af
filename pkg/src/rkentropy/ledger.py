"""Exact per-cell entropy accounting for one fully discrete step.

For every step the ledger records the entropy change, the entropy-flux sum and
the total production split into a temporal part (the convexity gap of the
entropy against the stage increments, contracted with B A^{-1}) and a spatial
part (the weighted interface productions).  The defining identity

    eta_next - eta_n + flux_sum = s_temporal + s_spatial

holds algebraically for exact stages, so its residual ('balance defect') is a
direct measurement of solver quality.  Singular stage matrices fall back to
the least-squares inverse of [A; b^T] when it has full column rank; the
trapezoidal scheme and the entropy-variable-averaged midpoint scheme carry
dedicated ledger paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from .errors import (
    DomainViolation,
    LedgerUnavailable,
    NonConvergence,
    NonPositiveWeights,
    NotInvertible,
    NotQuadraticEntropy,
)
from .models import EntropyModel
from .solver import SolverSettings, colored_fd_jacobian, rk_step
from .space import (
    FluxScheme,
    Grid1D,
    Periodic,
    _interface_entropy_arrays,
    residual,
)
from .tableau import ButcherTableau, builtin_tableau, invert_stage_matrix, stability_report

__all__ = [
    "StepLedger",
    "jump_B",
    "jump_E",
    "step_with_ledger",
    "quadratic_form_check",
    "cn_ledger",
    "gcn_step",
    "cfl_bound",
]


@dataclass
class StepLedger:
    """Per-cell entropy accounting of a single accepted step."""

    d_eta: np.ndarray
    flux_sum: np.ndarray
    s_temporal: np.ndarray
    s_spatial: np.ndarray
    s_total: np.ndarray
    balance_defect: float

    @classmethod
    def assemble(cls, d_eta, flux_sum, s_temporal, s_spatial):
        s_total = s_temporal + s_spatial
        defect = float(np.max(np.abs(d_eta + flux_sum - s_total)))
        return cls(
            d_eta=d_eta,
            flux_sum=flux_sum,
            s_temporal=s_temporal,
            s_spatial=s_spatial,
            s_total=s_total,
            balance_defect=defect,
        )


def jump_B(m: EntropyModel, a, b):
    """Convexity gap v(b)*(b-a) - (eta(b) - eta(a)); non-negative for convex eta.

    Evaluated through the per-entropy rearrangement that avoids catastrophic
    cancellation for nearby states: (b-a)^2/2 for the quadratic entropy and a
    log1p form for the logarithmic one.
    """
    m.require_admissible(a, "jump endpoint")
    m.require_admissible(b, "jump endpoint")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if m.entropy == "quadratic":
        out = (b - a) ** 2 / 2
    else:
        # log(b/a) - (b-a)/b with r = (b-a)/b
        r = (b - a) / b
        out = -np.log1p(-r) - r
    return float(out) if np.ndim(out) == 0 else out


def jump_E(m: EntropyModel, a, b):
    """Convexity gap (eta(b) - eta(a)) - v(a)*(b-a); non-negative for convex eta."""
    m.require_admissible(a, "jump endpoint")
    m.require_admissible(b, "jump endpoint")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if m.entropy == "quadratic":
        out = (b - a) ** 2 / 2
    else:
        # (b-a)/a - log(b/a) with q = (b-a)/a
        q = (b - a) / a
        out = q - np.log1p(q)
    return float(out) if np.ndim(out) == 0 else out


def _stage_interface_terms(scheme, grid, states, weights, lam):
    """Weighted flux differences and interface productions over stage states.

    Returns (flux_sum, s_spatial) where flux_sum_i = lam * sum_k b_k
    (Phi^k_{i+1/2} - Phi^k_{i-1/2}) and s_spatial_i = lam/2 * sum_k b_k
    (Pi^k_{i+1/2} + Pi^k_{i-1/2}).
    """
    n = states[0].size
    flux_sum = np.zeros(n)
    s_spatial = np.zeros(n)
    for w, state in zip(weights, states):
        ue = grid.padded(state)
        phi, pi = _interface_entropy_arrays(scheme, ue[:-1], ue[1:])
        flux_sum += w * (phi[1:] - phi[:-1])
        s_spatial += 0.5 * w * (pi[1:] + pi[:-1])
    return lam * flux_sum, lam * s_spatial


def step_with_ledger(
    t: ButcherTableau,
    scheme: FluxScheme,
    grid: Grid1D,
    u_n: np.ndarray,
    lam: float,
    settings: SolverSettings | None = None,
):
    """Advance one step and account for its entropy production per cell.

    The temporal part is E - dv^T B A^{-1} dU with the stage increments dU and
    entropy-variable increments dv; the spatial part collects the weighted
    interface productions of every stage.  Singular A falls back to the
    least-squares inverse; the trapezoidal tableau is delegated to its
    dedicated path.
    """
    try:
        inv = invert_stage_matrix(t)
    except NotInvertible:
        if t.name == "cn":
            return cn_ledger(scheme, grid, u_n, lam, settings)
        raise LedgerUnavailable(
            f"{t.name!r} has a singular stage matrix and no dedicated ledger path"
        ) from None

    u_n = np.asarray(u_n, dtype=float)
    u_next, sol = rk_step(t, scheme, grid, u_n, lam, settings)
    model = scheme.model

    if t.s == 1 and t.A[0, 0] == 1.0 and t.b[0] == 1.0:
        # Backward Euler: the temporal part collapses to the convexity gap at
        # the (stiffly accurate) stage, which is non-positive by construction.
        s_temporal = -jump_B(model, u_n, sol.stages[0])
    else:
        dU = sol.stages - u_n[None, :]
        dV = model.v(sol.stages) - model.v(u_n)[None, :]
        if inv.pseudo:
            dU = np.vstack([dU, (u_next - u_n)[None, :]])
        weight_inv = np.diag(t.b) @ inv.matrix
        s_temporal = jump_E(model, u_n, u_next) - np.einsum(
            "ki,kj,ji->i", dV, weight_inv, dU
        )

    flux_sum, s_spatial = _stage_interface_terms(scheme, grid, sol.stages, t.b, lam)
    d_eta = model.eta(u_next) - model.eta(u_n)
    return u_next, StepLedger.assemble(d_eta, flux_sum, s_temporal, s_spatial)


def quadratic_form_check(t: ButcherTableau, model: EntropyModel, dU: np.ndarray):
    """Temporal production as the quadratic form -1/2 dU^T Q dU per cell.

    Only meaningful for the quadratic entropy, where it must agree with the
    ledger's temporal part.
    """
    if model.entropy != "quadratic":
        raise NotQuadraticEntropy("quadratic-form check needs the quadratic entropy")
    report = stability_report(t)
    if report.Q is None:
        raise LedgerUnavailable(f"{t.name!r} has no Q matrix (singular stage matrix)")
    dU = np.atleast_2d(np.asarray(dU, dtype=float))
    return -0.5 * np.einsum("ki,kj,ji->i", dU, report.Q, dU)


def cn_ledger(
    scheme: FluxScheme,
    grid: Grid1D,
    u_n: np.ndarray,
    lam: float,
    settings: SolverSettings | None = None,
):
    """Trapezoidal step with its dedicated entropy split.

    The stage matrix is singular with rank-1 extension, so the generic ledger
    does not apply; instead the temporal part is (E - B)/2 plus the quarter
    cross term of entropy-variable and residual increments.
    """
    t = builtin_tableau("cn")
    u_n = np.asarray(u_n, dtype=float)
    u_next, sol = rk_step(t, scheme, grid, u_n, lam, settings)
    model = scheme.model

    R_old, R_new = sol.stage_residuals
    dv = model.v(u_next) - model.v(u_n)
    E = jump_E(model, u_n, u_next)
    B = jump_B(model, u_n, u_next)
    s_temporal = 0.5 * (E - B) + 0.25 * dv * (R_new - R_old)

    flux_sum, s_spatial = _stage_interface_terms(scheme, grid, sol.stages, t.b, lam)
    d_eta = model.eta(u_next) - model.eta(u_n)
    return u_next, StepLedger.assemble(d_eta, flux_sum, s_temporal, s_spatial)


def _entropy_averaged_v(model: EntropyModel, a: np.ndarray, b: np.ndarray):
    """Mean of v along the segment from a to b; closed form per entropy.

    The logarithmic case is -log(b/a)/(b-a), evaluated through log1p of the
    relative increment so nearly equal states lose no accuracy.
    """
    if model.entropy == "quadratic":
        return (a + b) / 2.0
    du = b - a
    q = du / a
    small = np.abs(q) < 1e-14
    du_safe = np.where(small, 1.0, du)
    vt = -np.log1p(np.where(small, 0.0, q)) / du_safe
    return np.where(small, -2.0 / (a + b), vt)


def gcn_step(
    scheme: FluxScheme,
    grid: Grid1D,
    u_n: np.ndarray,
    lam: float,
    settings: SolverSettings | None = None,
):
    """Midpoint scheme evaluated at the entropy-variable average state.

    Solves u_next = u_n - R(U(v~)) where v~ is the exact segment average of
    the entropy variables between u_n and u_next, so the temporal entropy
    production vanishes identically and the ledger carries only the spatial
    interface terms at the averaged state.
    """
    settings = settings or SolverSettings()
    u_n = np.asarray(u_n, dtype=float)
    model = scheme.model
    model.require_admissible(u_n, "initial state")
    n = u_n.size

    def midstate(w):
        return model.state_from_v(_entropy_averaged_v(model, u_n, w))

    def defect(w):
        return w - u_n + residual(scheme, grid, midstate(w), lam)

    w = u_n.copy()
    iterations = 0
    while True:
        G = defect(w)
        norm = float(np.max(np.abs(G)))
        if norm <= settings.newton_tol:
            break
        if iterations >= settings.max_newton_iters:
            raise NonConvergence(iterations, norm)
        # Colored finite differences on the composite map; same stencil as the
        # plain residual because the averaged state is local per cell.
        J = colored_fd_jacobian(defect, w, n, isinstance(grid.bc, Periodic))
        delta = splu(J.tocsc()).solve(G)
        alpha, placed = 1.0, False
        for _ in range(31):
            trial = w - alpha * delta
            if model.admissible(trial):
                w, placed = trial, True
                break
            alpha /= 2.0
        if not placed:
            raise DomainViolation("iterate left the admissible domain; step rejected")
        iterations += 1

    u_next = w
    W = midstate(u_next)
    flux_sum, s_spatial = _stage_interface_terms(scheme, grid, [W], [1.0], lam)
    d_eta = model.eta(u_next) - model.eta(u_n)
    s_temporal = np.zeros(n)
    return u_next, StepLedger.assemble(d_eta, flux_sum, s_temporal, s_spatial)


def cfl_bound(
    t: ButcherTableau,
    scheme: FluxScheme,
    u_window: np.ndarray,
    K: float,
    norm: str = "spectral",
) -> float:
    """Largest time-step ratio for which the stability bound holds with equality.

    Evaluates, over the interfaces of ``u_window`` and all stages,

        lam <= b_k D / (6 K (K^2 b_k / 2 + ||BA||) (B^2 + Qt^2 + D^2))

    with D = 2 mu, the mean-value flux Jacobian B and the viscosity-form
    coefficient Qt of the entropy-conservative core.  ``norm`` selects how
    ||BA|| is measured: 'spectral' (default), 'frobenius' or 'inf'.
    """
    if np.any(t.b <= 0.0):
        raise NonPositiveWeights(f"{t.name!r} has non-positive weights")
    u = np.asarray(u_window, dtype=float)
    if u.size < 2:
        raise ValueError("need at least one interface in the window")
    scheme.model.require_admissible(u, "window state")

    BA = np.diag(t.b) @ t.A
    if norm == "spectral":
        ba_norm = float(np.linalg.norm(BA, 2))
    elif norm == "frobenius":
        ba_norm = float(np.linalg.norm(BA, "fro"))
    elif norm == "inf":
        ba_norm = float(np.linalg.norm(BA, np.inf))
    else:
        raise ValueError(f"unknown norm {norm!r}")

    model = scheme.model
    uL, uR = u[:-1], u[1:]
    dv = model.v(uR) - model.v(uL)
    small = np.abs(dv) < 1e-12 * np.maximum(1.0, np.abs(model.v(uL)))
    dv_safe = np.where(small, 1.0, dv)
    s = scheme.orientation

    f_phys_L = s * model.f(uL)
    f_phys_R = s * model.f(uR)
    mean_jac = np.where(
        small,
        model.fprime((uL + uR) / 2) * model.H((uL + uR) / 2) * s,
        (f_phys_R - f_phys_L) / dv_safe,
    )
    from .space import _ec_core

    ec_phys = s * _ec_core(scheme, uL, uR)
    visc_coeff = np.where(small, 0.0, (f_phys_L + f_phys_R - 2 * ec_phys) / dv_safe)
    D = 2.0 * scheme.mu
    denom_face = mean_jac**2 + visc_coeff**2 + D**2
    worst_face = float(np.max(denom_face))
    if worst_face == 0.0:
        return np.inf

    per_stage = t.b * D / (6.0 * K * (K * K * t.b / 2.0 + ba_norm) * worst_face)
    return float(np.min(per_stage))

"""Newton solver for the coupled implicit Runge-Kutta stage equations.

Lower-triangular tableaux are solved stage by stage; fully implicit ones as a
single stacked Newton system whose Jacobian is built from the tridiagonal
(plus periodic corner) flux Jacobian of each stage.  Jacobians default to
colored finite differences with per-column perturbation 1e-7 * max(1, |u|);
the closed-form flux derivatives are available as the 'analytic' mode.

Within one step the factorized Jacobian is reused while the defect contracts
by at least a factor ~3 per iteration and refreshed at the current iterate
otherwise, so easy (in particular linear) solves cost one factorization.
The convergence check is always the true stage-equation defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DomainViolation, NonConvergence
from .space import FluxScheme, Grid1D, Periodic, flux_jacobian, residual
from .tableau import ButcherTableau

__all__ = ["SolverSettings", "StageSolution", "solve_stages", "rk_step"]

FD_EPS = 1e-7
MAX_HALVINGS = 30
# Defect contraction per iteration below which the frozen Jacobian is kept.
REFRESH_RATIO = 0.3


@dataclass(frozen=True)
class SolverSettings:
    newton_tol: float = 1e-12
    max_newton_iters: int = 50
    jacobian: str = "finite_difference"

    def __post_init__(self):
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if self.jacobian not in ("finite_difference", "analytic"):
            raise ValueError(f"unknown jacobian mode {self.jacobian!r}")


@dataclass
class StageSolution:
    """Converged stage states and residuals of one step."""

    stages: np.ndarray           # (s, n)
    stage_residuals: np.ndarray  # (s, n)
    newton_iterations: int
    converged_norm: float
    defects: np.ndarray = field(repr=False, default=None)


def _analytic_jacobian(scheme, grid, u, lam):
    ue = grid.padded(u)
    dL, dR = flux_jacobian(scheme, ue[:-1], ue[1:])
    n = u.size
    s = scheme.orientation * lam
    periodic = isinstance(grid.bc, Periodic)

    idx = np.arange(n)
    rows = [idx, idx[:-1], idx[1:]]
    cols = [idx, idx[1:], idx[:-1]]
    vals = [s * (dL[1:] - dR[:-1]), s * dR[1:-1], -s * dL[1:-1]]
    if periodic:
        rows += [np.array([n - 1]), np.array([0])]
        cols += [np.array([0]), np.array([n - 1])]
        vals += [np.array([s * dR[n]]), np.array([-s * dL[0]])]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()


def _fd_column_groups(n: int):
    """Column groups safe for simultaneous perturbation on a tridiagonal stencil.

    Strided mod-3 groups over the leading multiple of 3, remaining columns as
    singletons; valid for both the path and the periodic cycle graph.
    """
    m = n - (n % 3)
    groups = [np.arange(r, m, 3) for r in range(3) if r < m]
    groups += [np.array([c]) for c in range(m, n)]
    return groups


def colored_fd_jacobian(func, x, n, periodic):
    """Finite-difference Jacobian of a map with a cyclic tridiagonal stencil."""
    base = func(x)
    rows_all, cols_all, vals_all = [], [], []
    offsets = np.array([-1, 0, 1])
    for cols in _fd_column_groups(n):
        xp = x.copy()
        eps = FD_EPS * np.maximum(1.0, np.abs(x[cols]))
        xp[cols] += eps
        fp = func(xp)
        rows = cols[:, None] + offsets[None, :]
        if periodic:
            rows %= n
            valid = np.ones(rows.shape, dtype=bool)
        else:
            valid = (rows >= 0) & (rows < n)
            rows = np.clip(rows, 0, n - 1)
        vals = (fp[rows] - base[rows]) / eps[:, None]
        cmat = np.broadcast_to(cols[:, None], rows.shape)
        rows_all.append(rows[valid])
        cols_all.append(cmat[valid])
        vals_all.append(vals[valid])
    return sp.coo_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(n, n),
    ).tocsr()


def _fd_jacobian(scheme, grid, u, lam):
    return colored_fd_jacobian(
        lambda w: residual(scheme, grid, w, lam),
        u,
        u.size,
        isinstance(grid.bc, Periodic),
    )


def _residual_jacobian(scheme, grid, u, lam, settings):
    if settings.jacobian == "analytic":
        return _analytic_jacobian(scheme, grid, u, lam)
    return _fd_jacobian(scheme, grid, u, lam)


def _admissible_state(scheme, grid, u):
    model = scheme.model
    return model.admissible(u) and model.admissible(grid.padded(u)[[0, -1]])


def _newton(defect, jacobian, x0, settings, admissible):
    """Damped Newton with within-step Jacobian reuse.

    ``defect``/``jacobian``/``admissible`` act on the flat unknown vector.
    Returns (x, iterations, final defect norm).
    """
    x = x0.copy()
    G = defect(x)
    norm = float(np.max(np.abs(G)))
    iterations = 0
    lu = None
    while norm > settings.newton_tol:
        if iterations >= settings.max_newton_iters:
            raise NonConvergence(iterations, norm)
        if lu is None:
            lu = splu(jacobian(x))
        delta = lu.solve(G)
        alpha, placed = 1.0, False
        for _ in range(MAX_HALVINGS + 1):
            trial = x - alpha * delta
            if admissible(trial):
                placed = True
                break
            alpha /= 2.0
        if not placed:
            raise DomainViolation(
                "Newton iterate left the admissible domain; step rejected"
            )
        x = trial
        iterations += 1
        G = defect(x)
        new_norm = float(np.max(np.abs(G)))
        if new_norm > REFRESH_RATIO * norm:
            lu = None  # stale Jacobian: rebuild at the current iterate
        norm = new_norm
    return x, iterations, norm


def _solve_sequential(t, scheme, grid, u_n, lam, settings):
    s, n = t.s, u_n.size
    stages = np.empty((s, n))
    residuals = np.empty((s, n))
    total_iters = 0
    worst = 0.0
    for k in range(s):
        rhs = u_n.copy()
        for j in range(k):
            rhs -= t.A[k, j] * residuals[j]
        akk = t.A[k, k]
        if akk == 0.0:
            if not _admissible_state(scheme, grid, rhs):
                raise DomainViolation("explicit stage left the admissible domain")
            stages[k] = rhs
            residuals[k] = residual(scheme, grid, rhs, lam)
            continue

        def defect(U):
            return U - rhs + akk * residual(scheme, grid, U, lam)

        def jacobian(U):
            J = _residual_jacobian(scheme, grid, U, lam, settings)
            return (sp.eye(n, format="csr") + akk * J).tocsc()

        U, iters, norm = _newton(
            defect,
            jacobian,
            u_n,
            settings,
            lambda w: _admissible_state(scheme, grid, w),
        )
        stages[k] = U
        residuals[k] = residual(scheme, grid, U, lam)
        total_iters += iters
        worst = max(worst, norm)
    return stages, residuals, total_iters, worst


def _solve_coupled(t, scheme, grid, u_n, lam, settings):
    s, n = t.s, u_n.size
    eye = sp.eye(n, format="csr")

    def defect(x):
        U = x.reshape(s, n)
        R = np.stack([residual(scheme, grid, U[k], lam) for k in range(s)])
        return (U - u_n[None, :] + t.A @ R).ravel()

    def jacobian(x):
        U = x.reshape(s, n)
        J_stage = [
            _residual_jacobian(scheme, grid, U[j], lam, settings) for j in range(s)
        ]
        blocks = []
        for k in range(s):
            row = []
            for j in range(s):
                block = t.A[k, j] * J_stage[j] if t.A[k, j] != 0.0 else None
                if k == j:
                    block = eye if block is None else eye + block
                row.append(block)
            blocks.append(row)
        return sp.bmat(blocks, format="csc")

    def admissible(x):
        U = x.reshape(s, n)
        return all(_admissible_state(scheme, grid, U[k]) for k in range(s))

    x0 = np.tile(u_n, s)
    x, iters, norm = _newton(defect, jacobian, x0, settings, admissible)
    stages = x.reshape(s, n)
    residuals = np.stack([residual(scheme, grid, stages[k], lam) for k in range(s)])
    return stages, residuals, iters, norm


def solve_stages(
    t: ButcherTableau,
    scheme: FluxScheme,
    grid: Grid1D,
    u_n: np.ndarray,
    lam: float,
    settings: SolverSettings | None = None,
    path: str = "auto",
) -> StageSolution:
    """Solve the implicit stage system U^(k) = u_n - sum_j a_kj R(U^(j)).

    ``path`` selects 'sequential' (lower-triangular only), 'coupled', or
    'auto' which picks sequential whenever the tableau allows it.
    """
    settings = settings or SolverSettings()
    u_n = np.asarray(u_n, dtype=float)
    scheme.model.require_admissible(u_n, "initial state")
    if path == "auto":
        path = "sequential" if t.lower_triangular else "coupled"
    if path == "sequential":
        if not t.lower_triangular:
            raise ValueError("sequential path requires a lower-triangular tableau")
        stages, residuals, iters, norm = _solve_sequential(
            t, scheme, grid, u_n, lam, settings
        )
    elif path == "coupled":
        stages, residuals, iters, norm = _solve_coupled(
            t, scheme, grid, u_n, lam, settings
        )
    else:
        raise ValueError(f"unknown stage-solve path {path!r}")
    defects = stages - u_n[None, :] + t.A @ residuals
    return StageSolution(
        stages=stages,
        stage_residuals=residuals,
        newton_iterations=iters,
        converged_norm=norm,
        defects=defects,
    )


def rk_step(
    t: ButcherTableau,
    scheme: FluxScheme,
    grid: Grid1D,
    u_n: np.ndarray,
    lam: float,
    settings: SolverSettings | None = None,
    path: str = "auto",
):
    """Advance one step: u_next = u_n - sum_k b_k R^(k)."""
    sol = solve_stages(t, scheme, grid, u_n, lam, settings, path=path)
    u_next = np.asarray(u_n, dtype=float) - t.b @ sol.stage_residuals
    scheme.model.require_admissible(u_next, "updated state")
    return u_next, sol

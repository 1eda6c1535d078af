"""Stage solver: defect contract, special limits, dual paths, linear oracle."""

import numpy as np
import pytest

from rkentropy.errors import DomainViolation, NonConvergence
from rkentropy.models import EntropyModel
from rkentropy.solver import SolverSettings, rk_step, solve_stages
from rkentropy.space import (
    FixedGhost,
    Grid1D,
    Periodic,
    assemble_linear_operator,
    make_flux_scheme,
    residual,
)
from rkentropy.tableau import BUILTIN_NAMES, ButcherTableau, builtin_tableau, dirk_chain

BQ = make_flux_scheme(EntropyModel("burgers", "quadratic"), 0.1)
BL = make_flux_scheme(EntropyModel("burgers", "logarithmic"), 0.1)


@pytest.fixture
def shock_grid():
    grid = Grid1D(60, -1.0, 5.0, FixedGhost(1.5, 0.5))
    u = np.where(grid.centers() <= 0.0, 1.5, 0.5)
    return grid, u


def stage_defect(t, scheme, grid, u_n, lam, sol):
    """Re-evaluate the stage equations from the returned stages only."""
    R = np.stack(
        [residual(scheme, grid, sol.stages[k], lam) for k in range(t.s)]
    )
    return np.abs(sol.stages - u_n[None, :] + t.A @ R).max()


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_defect_contract(name, shock_grid):
    grid, u = shock_grid
    t = builtin_tableau(name)
    sol = solve_stages(t, BQ, grid, u, 0.5)
    assert stage_defect(t, BQ, grid, u, 0.5, sol) <= 1e-12


def test_zero_time_step(shock_grid):
    grid, u = shock_grid
    t = builtin_tableau("radau2")
    sol = solve_stages(t, BQ, grid, u, 1e-300)
    np.testing.assert_array_equal(sol.stages, np.tile(u, (2, 1)))
    assert sol.newton_iterations == 0


def test_constant_state_identity():
    grid = Grid1D(16, -1.0, 1.0, Periodic())
    u = np.full(16, 1.2)
    for name in ("be", "gauss2", "sdirk3"):
        u_next, sol = rk_step(builtin_tableau(name), BQ, grid, u, 0.5)
        np.testing.assert_array_equal(u_next, u)
        assert sol.newton_iterations == 0


def test_explicit_tableau_zero_iterations(shock_grid):
    grid, u = shock_grid
    heun = ButcherTableau(
        "heun", np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.5]),
        np.array([0.0, 1.0]), p=2,
    )
    sol = solve_stages(heun, BQ, grid, u, 0.2)
    assert sol.newton_iterations == 0
    assert stage_defect(heun, BQ, grid, u, 0.2, sol) <= 1e-14


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_linear_stages_match_dense_solve(name):
    # Independent oracle: the stacked stage system of the linear advection
    # semi-discretization solved densely via the assembled operator.
    grid = Grid1D(48, -1.0, 1.0, Periodic())
    scheme = make_flux_scheme(EntropyModel("advection", "quadratic"), 0.25)
    u = np.sin(np.pi * grid.centers()) + 0.3
    t = builtin_tableau(name)
    lam = 0.7
    dt = lam * grid.dx
    L = assemble_linear_operator(scheme, grid).matrix
    system = np.eye(t.s * grid.n) - dt * np.kron(t.A, L)
    expected = np.linalg.solve(system, np.tile(u, t.s))
    sol = solve_stages(t, scheme, grid, u, lam)
    np.testing.assert_allclose(sol.stages.ravel(), expected, atol=1e-11)


def test_be_fixed_point(shock_grid):
    grid, u = shock_grid
    u_next, _ = rk_step(builtin_tableau("be"), BQ, grid, u, 0.5)
    defect = u_next - u + residual(BQ, grid, u_next, 0.5)
    assert np.abs(defect).max() <= 1e-11


def test_dirk_chain_equals_be_substeps(shock_grid):
    grid, u = shock_grid
    weights = [0.3, 0.5, 0.2]
    lam = 0.5
    chained, _ = rk_step(dirk_chain(weights), BQ, grid, u, lam)
    be = builtin_tableau("be")
    w = u.copy()
    for frac in weights:
        w, _ = rk_step(be, BQ, grid, w, lam * frac)
    np.testing.assert_allclose(chained, w, atol=1e-11)


@pytest.mark.parametrize("scheme", [BQ, BL], ids=lambda s: s.form)
def test_sequential_and_coupled_agree(scheme, shock_grid):
    grid, u = shock_grid
    t = builtin_tableau("sdirk2")
    seq = solve_stages(t, scheme, grid, u, 0.5, path="sequential")
    cpl = solve_stages(t, scheme, grid, u, 0.5, path="coupled")
    np.testing.assert_allclose(seq.stages, cpl.stages, atol=1e-10)


def test_sequential_rejects_full_matrix(shock_grid):
    grid, u = shock_grid
    with pytest.raises(ValueError):
        solve_stages(builtin_tableau("gauss2"), BQ, grid, u, 0.5, path="sequential")


def test_analytic_matches_fd(shock_grid):
    grid, u = shock_grid
    fd = SolverSettings(jacobian="finite_difference")
    an = SolverSettings(jacobian="analytic")
    for scheme in (BQ, BL):
        a, _ = rk_step(builtin_tableau("radau2"), scheme, grid, u, 0.5, fd)
        b, _ = rk_step(builtin_tableau("radau2"), scheme, grid, u, 0.5, an)
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_conservation_periodic():
    grid = Grid1D(64, -1.0, 1.0, Periodic())
    u = 1.5 + 0.5 * np.sin(np.pi * grid.centers())
    for name in ("be", "cn", "radau3", "sdirk3"):
        u_next, _ = rk_step(builtin_tableau(name), BQ, grid, u, 0.4)
        assert abs((u_next - u).sum()) <= 1e-11


def test_nonconvergence_raises(shock_grid):
    grid, u = shock_grid
    settings = SolverSettings(max_newton_iters=1)
    with pytest.raises(NonConvergence) as info:
        solve_stages(builtin_tableau("radau2"), BQ, grid, u, 2.0, settings)
    assert info.value.iterations == 1
    assert info.value.norm > 0


def test_inadmissible_input_rejected():
    grid = Grid1D(8, -1.0, 5.0, FixedGhost(1.5, 0.5))
    u = np.full(8, -1.0)
    with pytest.raises(DomainViolation):
        solve_stages(builtin_tableau("be"), BL, grid, u, 0.5)


def test_positivity_guard_rejects_escaping_step():
    # A state hugging the domain boundary with a huge time step drives the
    # logarithmic model's iterates non-positive.
    grid = Grid1D(8, 0.0, 1.0, FixedGhost(1e-6, 2.0))
    u = np.geomspace(1e-6, 2.0, 8)
    with pytest.raises((DomainViolation, NonConvergence)):
        rk_step(builtin_tableau("be"), BL, grid, u, 5e3)


def test_solver_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(newton_tol=0.0)
    with pytest.raises(ValueError):
        SolverSettings(jacobian="magic")

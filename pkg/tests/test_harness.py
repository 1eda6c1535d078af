"""Run loop, CSV round trips, convergence tables, sweeps and configs."""

import numpy as np
import pytest

from rkentropy.config import default_config, load_config
from rkentropy.harness import (
    converge_global_entropy,
    converge_temporal_production,
    initial_state,
    make_setup,
    profile_entropy,
    read_csv_columns,
    run,
    sweep_lambda,
    total_entropy,
    write_convergence_csv,
    write_sweep_csv,
)


def small_burgers(**kw):
    base = dict(n=60, scheme="sdirk2", t_end=0.5)
    base.update(kw)
    return default_config("burgers", "quadratic", **base)


def small_advection(**kw):
    base = dict(n=50, scheme="radau2", t_end=0.2)
    base.update(kw)
    return default_config("advection", **base)


def test_initial_entropy_is_half():
    cfg = default_config("advection", scheme="be")
    model, _, grid = make_setup(cfg)
    u0 = initial_state(cfg, grid)
    assert total_entropy(model, grid, u0) == pytest.approx(0.5, abs=1e-13)


def test_zero_horizon_returns_initial_condition():
    cfg = small_burgers(t_end=0.0)
    res = run(cfg)
    np.testing.assert_array_equal(res.final.u, res.u_initial)
    assert len(res.times) == 1


def test_final_time_exact_with_truncated_step():
    # lambda chosen so t_end is not an integer number of steps
    cfg = small_burgers(lam=0.47, t_end=0.5)
    res = run(cfg)
    assert res.times[-1] == 0.5
    dt = 0.47 * (6.0 / 60)
    assert len(res.times) - 1 == int(np.floor(0.5 / dt)) + 1


def test_shock_position_single_scheme():
    cfg = default_config("burgers", "quadratic", scheme="be")
    res = run(cfg)
    _, _, grid = make_setup(cfg)
    steep = np.argmax(np.abs(np.diff(res.final.u)))
    x_face = grid.centers()[steep] + grid.dx / 2
    assert abs(x_face - 3.0) <= 2 * grid.dx


def test_run_outputs_and_roundtrip(tmp_path):
    cfg = small_burgers(ledger_stride=5)
    res = run(cfg, out_dir=tmp_path)
    assert set(res.files) == {"state", "ledger", "summary"}

    state = read_csv_columns(tmp_path / "state.csv")
    assert list(state) == ["step", "time", "i", "x", "u"]
    n = cfg.n
    np.testing.assert_array_equal(state["u"][:n], res.u_initial)
    np.testing.assert_array_equal(state["u"][n:], res.final.u)

    ledger = read_csv_columns(tmp_path / "ledger.csv")
    assert list(ledger) == [
        "step", "time", "i", "x_center", "u",
        "d_eta", "flux_sum", "s_total", "s_temporal", "s_spatial",
    ]
    last = ledger["step"] == ledger["step"].max()
    np.testing.assert_array_equal(ledger["s_temporal"][last],
                                  res.final_ledger.s_temporal)

    summary = read_csv_columns(tmp_path / "summary.csv")
    np.testing.assert_array_equal(summary["total_entropy"],
                                  res.total_entropy[1:])


def test_run_deterministic(tmp_path):
    cfg = small_burgers()
    run(cfg, out_dir=tmp_path / "a")
    run(cfg, out_dir=tmp_path / "b")
    for name in ("state.csv", "ledger.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_run_emits_plots(tmp_path):
    cfg = small_burgers(emit_plots=True)
    res = run(cfg, out_dir=tmp_path)
    assert (tmp_path / "state.png").exists()
    assert (tmp_path / "entropy.png").exists()
    assert res.files["state_plot"].stat().st_size > 0


def test_converge_global_entropy_be_order():
    cfg = small_advection(scheme="be", n=100, t_end=0.5)
    _, _, grid = make_setup(cfg)
    rows = converge_global_entropy(cfg, dts=[0.8 * grid.dx / 2**j for j in range(3)])
    assert rows[0].dt > rows[1].dt > rows[2].dt
    assert np.isnan(rows[0].observed_order)
    for row in rows[1:]:
        assert row.observed_order == pytest.approx(1.0, abs=0.3)


def test_converge_global_entropy_requires_advection():
    with pytest.raises(ValueError):
        converge_global_entropy(small_burgers())


def test_converge_temporal_production_accumulate_flag():
    cfg = small_burgers(scheme="be", n=60, t_end=1.0)
    dts = [0.4 * 0.1, 0.2 * 0.1]
    final = converge_temporal_production(cfg, dts=dts)
    accum = converge_temporal_production(cfg, dts=dts, accumulate=True)
    # The accumulated measure integrates ~1/dt steps, one order lower.
    assert abs(accum[0].value) > abs(final[0].value)
    assert final[1].observed_order > accum[1].observed_order


def test_sweep_lambda_threshold():
    cfg = small_burgers(scheme="sdirk2", n=60, t_end=1.0)
    result = sweep_lambda(cfg, [0.5, 1.0, 1.5, 2.0], refine_to=0.1)
    assert result.rows[0].stable
    if result.lambda_star is not None:
        lams = [r.lam for r in result.rows if not r.stable]
        assert result.lambda_star <= min(lams)


def test_profile_entropy_writes_csv(tmp_path):
    cfg = small_burgers(emit_plots=True)
    res, files = profile_entropy(cfg, out_dir=tmp_path)
    cols = read_csv_columns(files["profile"])
    assert cols["i"].size == cfg.n
    np.testing.assert_array_equal(cols["s_total"], res.final_ledger.s_total)
    assert files["profile_plot"].exists()


def test_convergence_and_sweep_csv_roundtrip(tmp_path):
    cfg = small_burgers(scheme="be", n=60, t_end=0.5)
    rows = converge_temporal_production(cfg, dts=[0.04, 0.02])
    path = write_convergence_csv(tmp_path / "c.csv", rows)
    cols = read_csv_columns(path)
    np.testing.assert_array_equal(cols["dt"], [r.dt for r in rows])
    np.testing.assert_array_equal(cols["value"], [r.value for r in rows])

    sweep = sweep_lambda(cfg, [0.5, 1.0], refine_to=0.25)
    spath = write_sweep_csv(tmp_path / "s.csv", sweep)
    scols = read_csv_columns(spath)
    assert list(scols) == ["lambda", "max_s_total", "stable"]
    assert scols["stable"].dtype == bool


def test_load_config_roundtrip(tmp_path):
    text = """
[problem]
law = burgers
entropy = logarithmic

[grid]
n = 80
xmin = -2.0
xmax = 4.0
bc = fixed_ghost
left = 1.5
right = 0.5

[flux]
mu = 0.2  # calibration: test value

[scheme]
name = radau2
lambda = 0.4
t_end = 1.5

[solver]
newton_tol = 1e-11
max_iters = 30
jacobian = analytic

[output]
dir = results
plots = true
"""
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.law == "burgers" and cfg.entropy == "logarithmic"
    assert cfg.n == 80 and cfg.xmin == -2.0 and cfg.xmax == 4.0
    assert cfg.mu == 0.2 and cfg.scheme == "radau2"
    assert cfg.lam == 0.4 and cfg.t_end == 1.5
    assert cfg.solver.newton_tol == 1e-11
    assert cfg.solver.max_newton_iters == 30
    assert cfg.solver.jacobian == "analytic"
    assert cfg.out_dir == "results" and cfg.emit_plots


def test_load_config_missing_file():
    with pytest.raises(FileNotFoundError):
        load_config("/nonexistent/path.ini")


def test_shipped_configs_parse():
    from rkentropy.config import config_dir

    for name in ("advection.ini", "burgers_quadratic.ini", "burgers_logarithmic.ini"):
        cfg = load_config(config_dir() / name)
        model, scheme, grid = make_setup(cfg)
        assert grid.n >= 4


def test_gcn_scheme_runs():
    cfg = small_burgers(scheme="gcn", t_end=0.25)
    res = run(cfg)
    assert res.max_s_temporal == 0.0
    assert res.max_balance_defect <= 1e-10

"""Experiment driver: time loops, convergence tables, sweeps and profiles.

Every public operation writes schema-stable CSV files (fixed column order,
shortest round-trip float formatting) and can render matplotlib figures next
to them.  Runs are deterministic: the same config produces bit-identical
output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .ledger import StepLedger, cn_ledger, gcn_step, step_with_ledger
from .models import EntropyModel
from .solver import rk_step
from .space import FixedGhost, Grid1D, GridState, Periodic, make_flux_scheme
from .tableau import builtin_tableau

__all__ = [
    "RunResult",
    "ConvergenceRow",
    "SweepRow",
    "SweepResult",
    "run",
    "converge_global_entropy",
    "converge_temporal_production",
    "sweep_lambda",
    "profile_entropy",
    "initial_state",
    "total_entropy",
    "read_csv_columns",
]

# Positive per-cell total production above this threshold counts as unstable.
POSITIVE_TOL = 1e-12

STATE_HEADER = ("step", "time", "i", "x", "u")
LEDGER_HEADER = (
    "step",
    "time",
    "i",
    "x_center",
    "u",
    "d_eta",
    "flux_sum",
    "s_total",
    "s_temporal",
    "s_spatial",
)
SUMMARY_HEADER = ("step", "time", "total_entropy", "max_s_total", "int_s_temporal")
CONVERGENCE_HEADER = ("dt", "value", "observed_order")
SWEEP_HEADER = ("lambda", "max_s_total", "stable")


def make_setup(config: RunConfig):
    """Model, flux scheme and grid for a config."""
    model = EntropyModel(law=config.law, entropy=config.entropy)
    scheme = make_flux_scheme(model, config.mu, form=config.form)
    bc = (
        Periodic()
        if config.bc == "periodic"
        else FixedGhost(config.bc_left, config.bc_right)
    )
    grid = Grid1D(config.n, config.xmin, config.xmax, bc)
    return model, scheme, grid


def initial_state(config: RunConfig, grid: Grid1D | None = None) -> np.ndarray:
    """Initial cell averages: a sine wave for advection, a step for Burgers."""
    if grid is None:
        _, _, grid = make_setup(config)
    x = grid.centers()
    if config.law == "advection":
        return np.sin(np.pi * x)
    return np.where(x <= 0.0, config.bc_left, config.bc_right)


def total_entropy(model: EntropyModel, grid: Grid1D, u: np.ndarray) -> float:
    """Midpoint-rule integral of the entropy over the domain."""
    return float(grid.dx * np.sum(model.eta(u)))


def _make_stepper(config: RunConfig, scheme, grid):
    name = config.scheme
    settings = config.solver

    if name == "gcn":
        return lambda u, lam: gcn_step(scheme, grid, u, lam, settings)
    if name == "cn":
        return lambda u, lam: cn_ledger(scheme, grid, u, lam, settings)
    tab = builtin_tableau(name)
    return lambda u, lam: step_with_ledger(tab, scheme, grid, u, lam, settings)


def _step_sizes(t_end: float, dt: float):
    """Uniform steps of length dt, with the last one truncated onto t_end."""
    if t_end <= 0.0:
        return []
    n_full = int(math.floor(t_end / dt + 1e-9))
    rem = t_end - n_full * dt
    sizes = [dt] * n_full
    if rem > 1e-12 * dt:
        sizes.append(rem)
    return sizes


@dataclass
class RunResult:
    config: RunConfig
    x: np.ndarray
    u_initial: np.ndarray
    final: GridState
    times: np.ndarray
    total_entropy: np.ndarray
    max_s_total: float
    max_s_temporal: float
    min_s_temporal: float
    max_balance_defect: float
    final_ledger: StepLedger | None
    temporal_integral_final: float
    temporal_integral_accum: float
    files: dict


def run(config: RunConfig, out_dir: str | Path | None = None) -> RunResult:
    """Advance the configured problem to t_end and record the entropy ledgers.

    Writes state.csv, ledger.csv and summary.csv when an output directory is
    configured (or passed); adds figures when plot emission is on.
    """
    model, scheme, grid = make_setup(config)
    stepper = _make_stepper(config, scheme, grid)
    x = grid.centers()
    u = initial_state(config, grid)
    u0 = u.copy()
    dt = config.lam * grid.dx

    target = out_dir if out_dir is not None else config.out_dir
    target = Path(target) if target is not None else None
    if target is not None:
        target.mkdir(parents=True, exist_ok=True)

    sizes = _step_sizes(config.t_end, dt)
    times = [0.0]
    entropies = [total_entropy(model, grid, u)]
    max_s_total = -np.inf
    max_s_temporal = -np.inf
    min_s_temporal = np.inf
    max_defect = 0.0
    accum = 0.0
    ledger = None

    state_rows = [(0, 0.0, i, x[i], u[i]) for i in range(grid.n)]
    ledger_rows = []
    summary_rows = []
    t = 0.0
    for k, dt_k in enumerate(sizes, start=1):
        lam_k = dt_k / grid.dx
        u, ledger = stepper(u, lam_k)
        t = config.t_end if k == len(sizes) else k * dt
        times.append(t)
        entropies.append(total_entropy(model, grid, u))
        step_max_total = float(ledger.s_total.max())
        max_s_total = max(max_s_total, step_max_total)
        max_s_temporal = max(max_s_temporal, float(ledger.s_temporal.max()))
        min_s_temporal = min(min_s_temporal, float(ledger.s_temporal.min()))
        max_defect = max(max_defect, ledger.balance_defect)
        int_st = grid.dx * float(ledger.s_temporal.sum())
        accum += int_st
        if target is not None:
            summary_rows.append((k, t, entropies[-1], step_max_total, int_st))
            stride = config.ledger_stride
            if (stride > 0 and (k % stride == 0 or k == len(sizes))) or (
                stride <= 0 and k == len(sizes)
            ):
                ledger_rows.extend(_ledger_rows(k, t, x, u, ledger))

    files = {}
    if target is not None:
        state_rows.extend(
            (len(sizes), config.t_end, i, x[i], u[i]) for i in range(grid.n)
        )
        files["state"] = _write_csv(target / "state.csv", STATE_HEADER, state_rows)
        files["ledger"] = _write_csv(target / "ledger.csv", LEDGER_HEADER, ledger_rows)
        files["summary"] = _write_csv(
            target / "summary.csv", SUMMARY_HEADER, summary_rows
        )
        if config.emit_plots:
            from . import plotting

            files["state_plot"] = plotting.save_state(
                x, u0, u, target / "state.png", title=_title(config)
            )
            files["entropy_plot"] = plotting.save_entropy_history(
                np.asarray(times), np.asarray(entropies), target / "entropy.png"
            )

    final_int = (
        grid.dx * float(ledger.s_temporal.sum()) if ledger is not None else 0.0
    )
    return RunResult(
        config=config,
        x=x,
        u_initial=u0,
        final=GridState(u=u, t=config.t_end),
        times=np.asarray(times),
        total_entropy=np.asarray(entropies),
        max_s_total=max_s_total,
        max_s_temporal=max_s_temporal,
        min_s_temporal=min_s_temporal,
        max_balance_defect=max_defect,
        final_ledger=ledger,
        temporal_integral_final=final_int,
        temporal_integral_accum=accum,
        files=files,
    )


def _title(config: RunConfig) -> str:
    return f"{config.law}/{config.entropy}, {config.scheme}, lambda={config.lam}"


def _ledger_rows(step, t, x, u, ledger: StepLedger):
    return [
        (
            step,
            t,
            i,
            x[i],
            u[i],
            ledger.d_eta[i],
            ledger.flux_sum[i],
            ledger.s_total[i],
            ledger.s_temporal[i],
            ledger.s_spatial[i],
        )
        for i in range(x.size)
    ]


def _fast_advance(config: RunConfig, need_ledger_last: bool):
    """March to t_end with ledgers only where required; returns (u, last ledger)."""
    model, scheme, grid = make_setup(config)
    u = initial_state(config, grid)
    dt = config.lam * grid.dx
    sizes = _step_sizes(config.t_end, dt)
    name = config.scheme
    settings = config.solver
    ledger = None
    if name in ("cn", "gcn"):
        stepper = _make_stepper(config, scheme, grid)
        for dt_k in sizes:
            u, ledger = stepper(u, dt_k / grid.dx)
        return model, grid, u, ledger
    tab = builtin_tableau(name)
    for k, dt_k in enumerate(sizes, start=1):
        lam_k = dt_k / grid.dx
        if need_ledger_last and k == len(sizes):
            u, ledger = step_with_ledger(tab, scheme, grid, u, lam_k, settings)
        else:
            u, _ = rk_step(tab, scheme, grid, u, lam_k, settings)
    return model, grid, u, ledger


@dataclass
class ConvergenceRow:
    dt: float
    value: float
    observed_order: float  # NaN on the first row


def _observed_orders(dts, values):
    orders = [float("nan")]
    for j in range(1, len(dts)):
        prev, cur = abs(values[j - 1]), abs(values[j])
        if prev > 0 and cur > 0:
            orders.append(math.log(prev / cur) / math.log(dts[j - 1] / dts[j]))
        else:
            orders.append(float("nan"))
    return orders


def _dt_ladder(config: RunConfig, grid_dx: float, levels: int):
    lam0 = config.lam
    return [lam0 * grid_dx / (2**j) for j in range(levels)]


def _snap_dt(t_end: float, dt: float) -> float:
    """Adjust dt so an integer number of steps lands exactly on t_end."""
    return t_end / max(1, round(t_end / dt))


def converge_global_entropy(
    config: RunConfig, dts=None, levels: int = 6
) -> list[ConvergenceRow]:
    """Error of the conserved global entropy at t_end against 1/2 per time step.

    Needs the periodic advection setup with the quadratic entropy, where the
    exact global entropy of the sine initial data is 1/2 for all time.
    """
    if config.law != "advection" or config.entropy != "quadratic":
        raise ValueError("global-entropy convergence needs advection with "
                         "the quadratic entropy")
    _, _, grid = make_setup(config)
    if dts is None:
        dts = _dt_ladder(config, grid.dx, levels)
    dts = [_snap_dt(config.t_end, dt) for dt in dts]

    values = []
    for dt in dts:
        cfg = config.replace(lam=dt / grid.dx)
        model, g, u, _ = _fast_advance(cfg, need_ledger_last=False)
        values.append(abs(total_entropy(model, g, u) - 0.5))
    orders = _observed_orders(dts, values)
    return [ConvergenceRow(d, v, o) for d, v, o in zip(dts, values, orders)]


def converge_temporal_production(
    config: RunConfig, dts=None, levels: int = 6, accumulate: bool = False
) -> list[ConvergenceRow]:
    """Spatially integrated temporal entropy production against the time step.

    By default measures the final step of each run (single-step scaling);
    ``accumulate`` sums the integral over all steps instead.
    """
    _, _, grid = make_setup(config)
    if dts is None:
        dts = _dt_ladder(config, grid.dx, levels)
    dts = [_snap_dt(config.t_end, dt) for dt in dts]

    values = []
    for dt in dts:
        cfg = config.replace(lam=dt / grid.dx)
        if accumulate:
            res = run(cfg, out_dir=None)
            values.append(res.temporal_integral_accum)
        else:
            _, g, _, ledger = _fast_advance(cfg, need_ledger_last=True)
            values.append(g.dx * float(ledger.s_temporal.sum()))
    orders = _observed_orders(dts, values)
    return [ConvergenceRow(d, v, o) for d, v, o in zip(dts, values, orders)]


@dataclass
class SweepRow:
    lam: float
    max_s_total: float
    stable: bool


@dataclass
class SweepResult:
    rows: list
    lambda_star: float | None  # bisected instability threshold, None if not found


def sweep_lambda(
    config: RunConfig, lambda_grid, refine_to: float = 0.05
) -> SweepResult:
    """Worst per-cell total entropy production per time-step ratio.

    Locates the instability threshold (sign change of the worst production)
    by bisection to +-``refine_to`` when the grid brackets one.
    """

    def worst(lam):
        return run(config.replace(lam=float(lam)), out_dir=None).max_s_total

    rows = []
    for lam in lambda_grid:
        m = worst(lam)
        rows.append(SweepRow(float(lam), m, bool(m <= POSITIVE_TOL)))

    lambda_star = None
    for a, b in zip(rows[:-1], rows[1:]):
        if a.stable and not b.stable:
            lo, hi = a.lam, b.lam
            while hi - lo > 2 * refine_to:
                mid = (lo + hi) / 2
                if worst(mid) <= POSITIVE_TOL:
                    lo = mid
                else:
                    hi = mid
            lambda_star = (lo + hi) / 2
            break
    return SweepResult(rows=rows, lambda_star=lambda_star)


def profile_entropy(config: RunConfig, out_dir: str | Path | None = None):
    """Per-cell production profile at t_end; writes profile.csv (and figure)."""
    res = run(config.replace(ledger_stride=0), out_dir=None)
    target = Path(out_dir if out_dir is not None else (config.out_dir or "out"))
    target.mkdir(parents=True, exist_ok=True)
    n_steps = len(res.times) - 1
    rows = _ledger_rows(n_steps, config.t_end, res.x, res.final.u, res.final_ledger)
    path = _write_csv(target / "profile.csv", LEDGER_HEADER, rows)
    files = {"profile": path}
    if config.emit_plots:
        from . import plotting

        files["profile_plot"] = plotting.save_profile(
            res.x, res.final_ledger, target / "profile.png", title=_title(config)
        )
    return res, files


# ---------------------------------------------------------------------------
# CSV helpers


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def _write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    return path


def write_convergence_csv(path, rows) -> Path:
    return _write_csv(
        Path(path),
        CONVERGENCE_HEADER,
        [(r.dt, r.value, r.observed_order) for r in rows],
    )


def write_sweep_csv(path, result: SweepResult) -> Path:
    return _write_csv(
        Path(path),
        SWEEP_HEADER,
        [(r.lam, r.max_s_total, r.stable) for r in result.rows],
    )


def read_csv_columns(path) -> dict:
    """Read any harness CSV back into named numpy columns."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        raw = list(reader)
    cols = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in raw]
        if all(v in ("true", "false") for v in vals):
            cols[name] = np.array([v == "true" for v in vals])
            continue
        try:
            cols[name] = np.array([int(v) for v in vals])
        except ValueError:
            try:
                cols[name] = np.array([float(v) for v in vals])
            except ValueError:
                cols[name] = np.array(vals)
    return cols

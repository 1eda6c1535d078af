"""Command-line interface.

Subcommands: run, converge (entropy|temporal), sweep, profile, tableau info.
Report paths write CSV files into the output directory and, with --plots,
matplotlib figures alongside them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import load_config
from .errors import RKEntropyError
from .tableau import BUILTIN_NAMES, builtin_tableau, stability_report


def _add_common(p):
    p.add_argument("config", help="path to a run config file")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--plots", action="store_true", help="render figures next to CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rkentropy",
        description="entropy production of implicit Runge-Kutta time integrators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="advance a configured problem to t_end")
    _add_common(p_run)

    p_conv = sub.add_parser("converge", help="convergence table against dt")
    p_conv.add_argument("kind", choices=("entropy", "temporal"))
    _add_common(p_conv)
    p_conv.add_argument("--levels", type=int, default=6,
                        help="number of dt halvings from the configured lambda")
    p_conv.add_argument("--accumulate", action="store_true",
                        help="sum the temporal production over the whole run")

    p_sweep = sub.add_parser("sweep", help="scan lambda for entropy instability")
    _add_common(p_sweep)
    p_sweep.add_argument("--lambda", dest="lambda_range", default="0.5:2.0:0.25",
                         help="grid as start:stop:step (inclusive)")

    p_prof = sub.add_parser("profile", help="per-cell production profile at t_end")
    _add_common(p_prof)

    p_tab = sub.add_parser("tableau", help="inspect a built-in tableau")
    tab_sub = p_tab.add_subparsers(dest="tableau_command", required=True)
    p_info = tab_sub.add_parser("info", help="print coefficients and stability data")
    p_info.add_argument("name", help=f"one of: {', '.join(BUILTIN_NAMES)}")
    p_info.add_argument("--csv", default=None, help="also write a one-row CSV here")
    return parser


def _resolve_out(args, config):
    out = args.out if args.out is not None else (config.out_dir or "out")
    cfg = config.replace(out_dir=str(out))
    if args.plots:
        cfg = cfg.replace(emit_plots=True)
    return cfg, Path(out)


def _cmd_run(args) -> int:
    cfg, out = _resolve_out(args, load_config(args.config))
    res = harness.run(cfg, out_dir=out)
    print(f"steps: {len(res.times) - 1}")
    print(f"total entropy at t={cfg.t_end}: {float(res.total_entropy[-1])!r}")
    print(f"max per-cell production over run: {float(res.max_s_total)!r}")
    print(f"max balance defect: {res.max_balance_defect:.3e}")
    for kind, path in res.files.items():
        print(f"wrote {kind}: {path}")
    return 0


def _cmd_converge(args) -> int:
    cfg, out = _resolve_out(args, load_config(args.config))
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "entropy":
        rows = harness.converge_global_entropy(cfg, levels=args.levels)
    else:
        rows = harness.converge_temporal_production(
            cfg, levels=args.levels, accumulate=args.accumulate
        )
    path = harness.write_convergence_csv(out / "convergence.csv", rows)
    print(f"{'dt':>12}  {'value':>14}  {'order':>7}")
    for r in rows:
        print(f"{r.dt:12.6g}  {r.value:14.6e}  {r.observed_order:7.3f}")
    print(f"wrote {path}")
    if cfg.emit_plots:
        from . import plotting

        fig = plotting.save_convergence(rows, out / "convergence.png",
                                        title=f"{cfg.scheme} ({args.kind})")
        print(f"wrote {fig}")
    return 0


def _parse_grid(spec: str):
    try:
        a, b, step = (float(tok) for tok in spec.split(":"))
    except ValueError:
        raise SystemExit(f"bad --lambda range {spec!r}; expected start:stop:step")
    return np.arange(a, b + 1e-12, step)


def _cmd_sweep(args) -> int:
    cfg, out = _resolve_out(args, load_config(args.config))
    out.mkdir(parents=True, exist_ok=True)
    result = harness.sweep_lambda(cfg, _parse_grid(args.lambda_range))
    path = harness.write_sweep_csv(out / "sweep.csv", result)
    print(f"{'lambda':>8}  {'max_s_total':>14}  stable")
    for r in result.rows:
        print(f"{r.lam:8.3f}  {r.max_s_total:14.6e}  {str(r.stable).lower()}")
    if result.lambda_star is not None:
        print(f"instability threshold lambda* ~ {result.lambda_star:.3f}")
    else:
        print("no instability threshold inside the grid")
    print(f"wrote {path}")
    if cfg.emit_plots:
        from . import plotting

        fig = plotting.save_sweep(result, out / "sweep.png", title=cfg.scheme)
        print(f"wrote {fig}")
    return 0


def _cmd_profile(args) -> int:
    cfg, out = _resolve_out(args, load_config(args.config))
    res, files = harness.profile_entropy(cfg, out_dir=out)
    led = res.final_ledger
    print(f"max S:          {float(led.s_total.max())!r}")
    print(f"max S temporal: {float(led.s_temporal.max())!r}")
    print(f"min S temporal: {float(led.s_temporal.min())!r}")
    for kind, path in files.items():
        print(f"wrote {kind}: {path}")
    return 0


def _matrix_lines(name, M):
    body = np.array2string(np.asarray(M), precision=12, suppress_small=False)
    return f"{name} =\n{body}"


def _cmd_tableau_info(args) -> int:
    t = builtin_tableau(args.name)
    rep = stability_report(t)
    print(f"scheme {t.name}: s={t.s}, p={t.p}, kind={t.diagonal_kind}")
    print(_matrix_lines("A", t.A))
    print(_matrix_lines("b", t.b))
    print(_matrix_lines("c", t.c))
    print(_matrix_lines("M", rep.M))
    print(_matrix_lines("M eigenvalues", rep.m_eigenvalues))
    if rep.a_invertible:
        print(_matrix_lines("Q", rep.Q))
        print(_matrix_lines("Q eigenvalues", rep.q_eigenvalues))
    else:
        print("Q: unavailable (stage matrix is singular)")
    print(f"weights non-negative: {rep.b_nonnegative}")
    print(f"algebraically stable: {rep.algebraically_stable}")
    if args.csv:
        qmin = float(rep.q_eigenvalues[0]) if rep.q_eigenvalues is not None else float("nan")
        harness._write_csv(
            Path(args.csv),
            ("name", "s", "p", "algebraically_stable", "qmin_eig", "mmin_eig"),
            [(t.name, t.s, t.p, rep.algebraically_stable, qmin,
              float(rep.m_eigenvalues[0]))],
        )
        print(f"wrote {args.csv}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "profile":
            return _cmd_profile(args)
        if args.command == "tableau":
            return _cmd_tableau_info(args)
    except RKEntropyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    raise SystemExit(main())

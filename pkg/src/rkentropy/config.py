"""Run configuration and its INI-style file format.

A config file has the flat sections problem, grid, flux, scheme, solver and
output.  Keys map one-to-one onto :class:`RunConfig` fields; "lambda" in the
scheme section becomes the ``lam`` attribute.  See the README for the full
schema and the shipped files under configs/ for calibrated defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .solver import SolverSettings

__all__ = ["RunConfig", "load_config", "default_config"]

HARNESS_SCHEMES = (
    "be",
    "cn",
    "gcn",
    "gauss2",
    "gauss3",
    "radau2",
    "radau3",
    "sdirk2",
    "sdirk3",
)


@dataclass(frozen=True)
class RunConfig:
    law: str = "burgers"
    entropy: str = "quadratic"
    mu: float = 0.1
    form: str | None = None
    n: int = 240
    xmin: float = -1.0
    xmax: float = 5.0
    bc: str = "fixed_ghost"
    bc_left: float = 1.5
    bc_right: float = 0.5
    scheme: str = "sdirk2"
    lam: float = 0.5
    t_end: float = 3.0
    solver: SolverSettings = field(default_factory=SolverSettings)
    out_dir: str | None = None
    emit_plots: bool = False
    ledger_stride: int = 1

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.bc not in ("periodic", "fixed_ghost"):
            raise ValueError(f"unknown boundary treatment {self.bc!r}")

    def replace(self, **kw) -> "RunConfig":
        return replace(self, **kw)


def default_config(law: str, entropy: str = "quadratic", **overrides) -> RunConfig:
    """Calibrated defaults for the two test problems."""
    if law == "advection":
        base = RunConfig(
            law="advection",
            entropy="quadratic",
            mu=0.0,
            n=400,
            xmin=-1.0,
            xmax=1.0,
            bc="periodic",
            bc_left=0.0,
            bc_right=0.0,
            scheme="be",
            lam=0.5,
            t_end=2.0,
        )
    elif law == "burgers":
        base = RunConfig(law="burgers", entropy=entropy)
    else:
        raise ValueError(f"unknown law {law!r}")
    return base.replace(**overrides) if overrides else base


def _get(parser, section, key, conv, default):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        if conv is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return conv(raw)
    return default


def load_config(path) -> RunConfig:
    """Parse a config file into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    law = _get(parser, "problem", "law", str, "burgers")
    entropy = _get(parser, "problem", "entropy", str, "quadratic")
    base = default_config(law, entropy if law == "burgers" else "quadratic")

    solver = SolverSettings(
        newton_tol=_get(parser, "solver", "newton_tol", float, 1e-12),
        max_newton_iters=_get(parser, "solver", "max_iters", int, 50),
        jacobian=_get(parser, "solver", "jacobian", str, "finite_difference"),
    )
    return base.replace(
        entropy=entropy,
        mu=_get(parser, "flux", "mu", float, base.mu),
        form=_get(parser, "flux", "form", str, None),
        n=_get(parser, "grid", "n", int, base.n),
        xmin=_get(parser, "grid", "xmin", float, base.xmin),
        xmax=_get(parser, "grid", "xmax", float, base.xmax),
        bc=_get(parser, "grid", "bc", str, base.bc),
        bc_left=_get(parser, "grid", "left", float, base.bc_left),
        bc_right=_get(parser, "grid", "right", float, base.bc_right),
        scheme=_get(parser, "scheme", "name", str, base.scheme),
        lam=_get(parser, "scheme", "lambda", float, base.lam),
        t_end=_get(parser, "scheme", "t_end", float, base.t_end),
        solver=solver,
        out_dir=_get(parser, "output", "dir", str, None),
        emit_plots=_get(parser, "output", "plots", bool, False),
        ledger_stride=_get(parser, "output", "ledger_stride", int, 1),
    )


def config_dir() -> Path:
    """Directory holding the shipped example configs (repo checkout layout)."""
    return Path(__file__).resolve().parents[2] / "configs"

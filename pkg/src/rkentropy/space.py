"""Finite-volume semi-discretization on a uniform 1-d grid.

Numerical fluxes are an entropy-conservative core plus scalar dissipation
``mu`` acting on the jump of the entropy variables.  Three closed-form flux
families cover the supported runs; ``ec_generic`` evaluates the unique scalar
entropy-conservative flux directly from the potential jump.

The advection family reproduces the transported form u_t = u_x, so its fluxes
are returned exactly as written for that orientation while the residual and
the interface entropy quantities carry the sign of the conservation-law form
u_t + (-u)_x = 0.  Everything downstream (stage solver, entropy ledger) sees
one consistent orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UnsupportedOperator
from .models import EntropyModel

__all__ = [
    "Periodic",
    "FixedGhost",
    "Grid1D",
    "GridState",
    "FluxScheme",
    "make_flux_scheme",
    "ec_flux",
    "numerical_flux",
    "flux_jacobian",
    "residual",
    "interface_entropy",
    "InterfaceEntropy",
    "LinearOperator",
    "assemble_linear_operator",
]

# Jumps of the entropy variable below this (relative) size are treated as the
# removable singularity of the quotient flux.
EC_SINGULAR_TOL = 1e-12

_FORMS = ("ec_generic", "burgers_quadratic", "burgers_logarithmic", "advection_viscous")


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class FixedGhost:
    left: float
    right: float


@dataclass(frozen=True)
class Grid1D:
    """Uniform cells on [x_min, x_max] with a boundary closure."""

    n: int
    x_min: float
    x_max: float
    bc: Periodic | FixedGhost = Periodic()

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 cells")
        if not self.x_max > self.x_min:
            raise ValueError("empty domain")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    def padded(self, u: np.ndarray) -> np.ndarray:
        """Cell values extended by one ghost cell on each side."""
        if isinstance(self.bc, Periodic):
            return np.concatenate(([u[-1]], u, [u[0]]))
        return np.concatenate(([self.bc.left], u, [self.bc.right]))


@dataclass
class GridState:
    """Cell averages at one time level."""

    u: np.ndarray
    t: float


@dataclass(frozen=True)
class FluxScheme:
    """Entropy-conservative flux core plus scalar dissipation coefficient."""

    model: EntropyModel
    mu: float
    form: str

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("dissipation coefficient must be non-negative")
        if self.form not in _FORMS:
            raise ValueError(f"unknown flux form {self.form!r}")
        required = {
            "burgers_quadratic": ("burgers", "quadratic"),
            "burgers_logarithmic": ("burgers", "logarithmic"),
            "advection_viscous": ("advection", "quadratic"),
        }.get(self.form)
        if required is not None and (self.model.law, self.model.entropy) != required:
            raise ValueError(
                f"flux form {self.form!r} requires law/entropy {required}"
            )

    @property
    def orientation(self) -> float:
        """+1 for the conservation-law orientation, -1 for transported advection."""
        return -1.0 if self.form == "advection_viscous" else 1.0


def make_flux_scheme(model: EntropyModel, mu: float, form: str | None = None) -> FluxScheme:
    """Build the flux scheme, deriving the closed form from the model by default."""
    if form is None:
        form = {
            ("advection", "quadratic"): "advection_viscous",
            ("burgers", "quadratic"): "burgers_quadratic",
            ("burgers", "logarithmic"): "burgers_logarithmic",
        }[(model.law, model.entropy)]
    return FluxScheme(model=model, mu=float(mu), form=form)


def _ec_core(scheme: FluxScheme, uL, uR):
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    if scheme.form == "burgers_quadratic":
        # Viscosity form of (uL^2 + uL uR + uR^2)/6; exact at coincident states.
        return (uL * uL + uR * uR) / 4.0 - (uR - uL) ** 2 / 12.0
    if scheme.form == "burgers_logarithmic":
        return uL * uR / 2.0
    if scheme.form == "advection_viscous":
        return (uL + uR) / 2.0
    # Generic quotient of the potential jump over the entropy-variable jump,
    # with the removable singularity resolved by consistency at the mean.
    m = scheme.model
    dv = m.v(uR) - m.v(uL)
    vbar = (m.v(uR) + m.v(uL)) / 2.0
    small = np.abs(dv) < EC_SINGULAR_TOL * np.maximum(1.0, np.abs(vbar))
    dv_safe = np.where(small, 1.0, dv)
    quotient = (m.theta(uR) - m.theta(uL)) / dv_safe
    return np.where(small, m.f((uL + uR) / 2.0), quotient)


def ec_flux(scheme: FluxScheme, uL, uR):
    """Entropy-conservative flux across one face, written as in its closed form."""
    scheme.model.require_admissible(uL, "left state")
    scheme.model.require_admissible(uR, "right state")
    out = _ec_core(scheme, uL, uR)
    return float(out) if np.ndim(out) == 0 else out


def _flux(scheme: FluxScheme, uL, uR):
    m = scheme.model
    dv = m.v(uR) - m.v(uL)
    return _ec_core(scheme, uL, uR) - scheme.orientation * scheme.mu * dv


def numerical_flux(scheme: FluxScheme, uL, uR):
    """EC core plus the dissipation term, in the scheme's printed orientation."""
    scheme.model.require_admissible(uL, "left state")
    scheme.model.require_admissible(uR, "right state")
    out = _flux(scheme, uL, uR)
    return float(out) if np.ndim(out) == 0 else out


def flux_jacobian(scheme: FluxScheme, uL, uR):
    """Derivatives (dF/duL, dF/duR) of the numerical flux, closed form per family."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    mu = scheme.mu
    if scheme.form == "burgers_quadratic":
        dL = (2 * uL + uR) / 6.0 + mu
        dR = (uL + 2 * uR) / 6.0 - mu
    elif scheme.form == "burgers_logarithmic":
        dL = uR / 2.0 + mu / (uL * uL)
        dR = uL / 2.0 - mu / (uR * uR)
    elif scheme.form == "advection_viscous":
        dL = np.full_like(uL, 0.5 - mu)
        dR = np.full_like(uR, 0.5 + mu)
    else:
        # No closed form for the generic family: centered differences per face.
        hL = 1e-7 * np.maximum(1.0, np.abs(uL))
        hR = 1e-7 * np.maximum(1.0, np.abs(uR))
        dL = (_flux(scheme, uL + hL, uR) - _flux(scheme, uL - hL, uR)) / (2 * hL)
        dR = (_flux(scheme, uL, uR + hR) - _flux(scheme, uL, uR - hR)) / (2 * hR)
    return dL, dR


def residual(scheme: FluxScheme, grid: Grid1D, u: np.ndarray, lam: float) -> np.ndarray:
    """Per-cell residual R_i = lam * (F_{i+1/2} - F_{i-1/2}) in update orientation.

    ``lam`` is dt/dx.  The advancing update is u_next = u - sum_k b_k R^(k).
    """
    u = np.asarray(u, dtype=float)
    scheme.model.require_admissible(u, "cell state")
    ue = grid.padded(u)
    scheme.model.require_admissible(ue[[0, -1]], "ghost state")
    F = _flux(scheme, ue[:-1], ue[1:])
    return scheme.orientation * lam * (F[1:] - F[:-1])


class InterfaceEntropy(NamedTuple):
    Phi: float
    Pi: float


def interface_entropy(scheme: FluxScheme, uL, uR) -> InterfaceEntropy:
    """Numerical entropy flux Phi and entropy production Pi across one face.

    Both refer to the conservation-law orientation actually advanced, so
    Pi <= 0 for every admissible pair whenever mu > 0 and Pi = 0 for the pure
    entropy-conservative core.
    """
    scheme.model.require_admissible(uL, "left state")
    scheme.model.require_admissible(uR, "right state")
    phi, pi = _interface_entropy_arrays(scheme, np.asarray(uL, float), np.asarray(uR, float))
    if np.ndim(phi) == 0:
        return InterfaceEntropy(float(phi), float(pi))
    return InterfaceEntropy(phi, pi)


def _interface_entropy_arrays(scheme: FluxScheme, uL, uR):
    m = scheme.model
    F = _flux(scheme, uL, uR)
    vbar = (m.v(uL) + m.v(uR)) / 2.0
    tbar = (m.theta(uL) + m.theta(uR)) / 2.0
    dv = m.v(uR) - m.v(uL)
    dt_ = m.theta(uR) - m.theta(uL)
    s = scheme.orientation
    phi = s * (vbar * F - tbar)
    pi = s * (dv * F - dt_)
    return phi, pi


@dataclass(frozen=True)
class LinearOperator:
    """Constant operator L with u_t = L u, plus its symmetric part."""

    matrix: np.ndarray
    symmetric_part: np.ndarray


def assemble_linear_operator(scheme: FluxScheme, grid: Grid1D) -> LinearOperator:
    """Assemble L for the periodic advection scheme so residual(u) = -dt * L u."""
    if scheme.form != "advection_viscous" or not isinstance(grid.bc, Periodic):
        raise UnsupportedOperator(
            "linear operator assembly needs the periodic advection scheme"
        )
    n = grid.n
    lam = 1.0 / grid.dx  # dt = 1 probe
    L = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        L[:, j] = -residual(scheme, grid, e, lam)
    return LinearOperator(matrix=L, symmetric_part=L + L.T)

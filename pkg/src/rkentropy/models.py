"""Scalar conservation laws paired with entropy functions.

Two laws (linear advection, inviscid Burgers) and two entropies (quadratic,
logarithmic) cover the supported configurations.  Each model exposes the flux
f, entropy eta, entropy variable v = eta', entropy flux phi, entropy potential
theta = v*f - phi and the inverse Hessian H = 1/eta''.  The advection model
keeps f(u) = u; the transport orientation of the advection scheme is handled
by the spatial discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation

__all__ = ["EntropyModel", "Bundle", "eval_bundle"]

_VALID = {
    ("advection", "quadratic"),
    ("burgers", "quadratic"),
    ("burgers", "logarithmic"),
}


@dataclass(frozen=True)
class Bundle:
    """Pointwise evaluation of all model quantities at one state."""

    f: float
    fprime: float
    eta: float
    v: float
    phi: float
    theta: float
    H: float


@dataclass(frozen=True)
class EntropyModel:
    """A conservation law plus a compatible entropy pair."""

    law: str = "burgers"
    entropy: str = "quadratic"

    def __post_init__(self):
        if (self.law, self.entropy) not in _VALID:
            raise ValueError(
                f"unsupported pairing law={self.law!r}, entropy={self.entropy!r}"
            )

    # The logarithmic entropy needs strictly positive states; the quadratic
    # one is defined on the whole line.
    @property
    def admissible_min(self) -> float:
        return 0.0 if self.entropy == "logarithmic" else -np.inf

    def admissible(self, u) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all(u > self.admissible_min)) and bool(np.all(np.isfinite(u)))

    def require_admissible(self, u, context: str = "state"):
        if not self.admissible(u):
            raise DomainViolation(
                f"{context} left the admissible domain of the "
                f"{self.entropy} entropy ({self.law})"
            )

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return u if self.law == "advection" else u * u / 2

    def fprime(self, u):
        u = np.asarray(u, dtype=float)
        return np.ones_like(u) if self.law == "advection" else u

    def eta(self, u):
        u = np.asarray(u, dtype=float)
        return -np.log(u) if self.entropy == "logarithmic" else u * u / 2

    def v(self, u):
        u = np.asarray(u, dtype=float)
        return -1.0 / u if self.entropy == "logarithmic" else u

    def H(self, u):
        u = np.asarray(u, dtype=float)
        return u * u if self.entropy == "logarithmic" else np.ones_like(u)

    def phi(self, u):
        u = np.asarray(u, dtype=float)
        if self.law == "advection":
            return u * u / 2
        if self.entropy == "logarithmic":
            return -u
        return u**3 / 3

    def theta(self, u):
        u = np.asarray(u, dtype=float)
        if self.law == "advection":
            return u * u / 2
        if self.entropy == "logarithmic":
            return u / 2
        return u**3 / 6

    def state_from_v(self, v):
        """Invert the entropy-variable map."""
        v = np.asarray(v, dtype=float)
        return -1.0 / v if self.entropy == "logarithmic" else v


def eval_bundle(m: EntropyModel, u: float) -> Bundle:
    """Evaluate every model quantity at an admissible state."""
    m.require_admissible(u, context=f"u={u!r}")
    return Bundle(
        f=float(m.f(u)),
        fprime=float(m.fprime(u)),
        eta=float(m.eta(u)),
        v=float(m.v(u)),
        phi=float(m.phi(u)),
        theta=float(m.theta(u)),
        H=float(m.H(u)),
    )

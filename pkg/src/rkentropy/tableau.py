"""Butcher tableaux and their algebraic-stability classification.

Provides the built-in implicit Runge-Kutta schemes used by the solvers, the
chained backward-Euler (DIRK) family, stage-matrix inversion including the
least-squares fallback for singular stage matrices, and the Q/M stability
matrices that control temporal entropy production for quadratic entropies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTableau, NotInvertible, UnknownScheme

__all__ = [
    "ButcherTableau",
    "StabilityReport",
    "StageInverse",
    "BUILTIN_NAMES",
    "builtin_tableau",
    "dirk_chain",
    "invert_stage_matrix",
    "stability_report",
]

# Eigenvalues of symmetric matrices at or above this value count as non-negative.
PSD_TOL = 1e-10


@dataclass(frozen=True)
class ButcherTableau:
    """A Runge-Kutta method: stage matrix A, weights b, nodes c, design order p."""

    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        s = b.size
        if A.shape != (s, s) or c.shape != (s,):
            raise ValueError(f"inconsistent tableau shapes for {self.name!r}")
        if s < 1 or self.p < 1:
            raise ValueError("stage count and order must be at least 1")

    @property
    def s(self) -> int:
        return self.b.size

    @property
    def diagonal_kind(self) -> str:
        """Classify A: 'explicit', 'dirk' or 'fully-implicit'."""
        upper = np.triu(self.A, k=1)
        if np.any(upper != 0.0):
            return "fully-implicit"
        diag = np.diag(self.A)
        if np.all(diag == 0.0):
            return "explicit"
        return "dirk"

    @property
    def lower_triangular(self) -> bool:
        return self.diagonal_kind in ("explicit", "dirk")


@dataclass(frozen=True)
class StageInverse:
    """Inverse of the stage matrix, or its least-squares substitute.

    ``matrix`` is s-by-s when A is invertible, s-by-(s+1) when the inverse is
    the least-squares one built from A extended by the weight row.  In the
    latter case the extra column acts on the full-step increment.
    """

    matrix: np.ndarray
    pseudo: bool


@dataclass(frozen=True)
class StabilityReport:
    """Q/M stability matrices and the algebraic-stability verdict."""

    Q: np.ndarray | None
    M: np.ndarray
    q_eigenvalues: np.ndarray | None
    m_eigenvalues: np.ndarray
    b_nonnegative: bool
    algebraically_stable: bool
    a_invertible: bool


def _gauss2() -> ButcherTableau:
    r3 = np.sqrt(3.0)
    A = np.array([[1 / 4, 1 / 4 - r3 / 6], [1 / 4 + r3 / 6, 1 / 4]])
    b = np.array([1 / 2, 1 / 2])
    c = np.array([1 / 2 - r3 / 6, 1 / 2 + r3 / 6])
    return ButcherTableau("gauss2", A, b, c, p=4)


def _gauss3() -> ButcherTableau:
    r15 = np.sqrt(15.0)
    A = np.array(
        [
            [5 / 36, 2 / 9 - r15 / 15, 5 / 36 - r15 / 30],
            [5 / 36 + r15 / 24, 2 / 9, 5 / 36 - r15 / 24],
            [5 / 36 + r15 / 30, 2 / 9 + r15 / 15, 5 / 36],
        ]
    )
    b = np.array([5 / 18, 4 / 9, 5 / 18])
    c = np.array([1 / 2 - r15 / 10, 1 / 2, 1 / 2 + r15 / 10])
    return ButcherTableau("gauss3", A, b, c, p=6)


def _radau2() -> ButcherTableau:
    A = np.array([[5 / 12, -1 / 12], [3 / 4, 1 / 4]])
    b = np.array([3 / 4, 1 / 4])
    c = np.array([1 / 3, 1.0])
    return ButcherTableau("radau2", A, b, c, p=3)


def _radau3() -> ButcherTableau:
    r6 = np.sqrt(6.0)
    A = np.array(
        [
            [(88 - 7 * r6) / 360, (296 - 169 * r6) / 1800, (-2 + 3 * r6) / 225],
            [(296 + 169 * r6) / 1800, (88 + 7 * r6) / 360, (-2 - 3 * r6) / 225],
            [(16 - r6) / 36, (16 + r6) / 36, 1 / 9],
        ]
    )
    b = np.array([(16 - r6) / 36, (16 + r6) / 36, 1 / 9])
    c = np.array([(4 - r6) / 10, (4 + r6) / 10, 1.0])
    return ButcherTableau("radau3", A, b, c, p=5)


def _sdirk2() -> ButcherTableau:
    g = 1.0 - np.sqrt(2.0) / 2.0
    A = np.array([[g, 0.0], [np.sqrt(2.0) / 2.0, g]])
    b = np.array([np.sqrt(2.0) / 2.0, g])
    c = np.array([g, 1.0])
    return ButcherTableau("sdirk2", A, b, c, p=2)


def _sdirk3() -> ButcherTableau:
    lam = 0.4358665215
    b1 = (-6 * lam * lam + 16 * lam - 1) / 4
    b2 = (6 * lam * lam - 20 * lam + 5) / 4
    A = np.array(
        [
            [lam, 0.0, 0.0],
            [(1 - lam) / 2, lam, 0.0],
            [b1, b2, lam],
        ]
    )
    b = np.array([b1, b2, lam])
    c = np.array([lam, (1 + lam) / 2, 1.0])
    return ButcherTableau("sdirk3", A, b, c, p=3)


_BUILTINS = {
    "be": lambda: ButcherTableau(
        "be", np.array([[1.0]]), np.array([1.0]), np.array([1.0]), p=1
    ),
    "cn": lambda: ButcherTableau(
        "cn",
        np.array([[0.0, 0.0], [0.5, 0.5]]),
        np.array([0.5, 0.5]),
        np.array([0.0, 1.0]),
        p=2,
    ),
    "gauss2": _gauss2,
    "gauss3": _gauss3,
    "radau2": _radau2,
    "radau3": _radau3,
    "sdirk2": _sdirk2,
    "sdirk3": _sdirk3,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_tableau(name: str) -> ButcherTableau:
    """Look up one of the built-in schemes by name."""
    try:
        make = _BUILTINS[name]
    except KeyError:
        raise UnknownScheme(
            f"unknown scheme {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        ) from None
    return make()


def dirk_chain(b) -> ButcherTableau:
    """DIRK tableau equivalent to consecutive backward-Euler substeps.

    Row k of A repeats the first k weights, so each stage is a backward-Euler
    step of size ``b_k * dt`` starting from the previous stage.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise DegenerateTableau("weight vector must be a non-empty 1-d sequence")
    if np.any(b == 0.0):
        raise DegenerateTableau("chained backward-Euler steps need nonzero weights")
    s = b.size
    A = np.zeros((s, s))
    for k in range(s):
        A[k, : k + 1] = b[: k + 1]
    c = np.cumsum(b)
    return ButcherTableau(f"dirk_chain{s}", A, b, c, p=1)


def invert_stage_matrix(t: ButcherTableau) -> StageInverse:
    """Invert A, falling back to the least-squares inverse of [A; b^T].

    Raises :class:`NotInvertible` when the extended matrix is rank deficient,
    which signals that only a scheme-specific ledger path can be used.
    """
    s = t.s
    if np.linalg.matrix_rank(t.A) == s:
        return StageInverse(np.linalg.inv(t.A), pseudo=False)
    ext = np.vstack([t.A, t.b])
    if np.linalg.matrix_rank(ext) == s:
        pinv = np.linalg.solve(ext.T @ ext, ext.T)
        return StageInverse(pinv, pseudo=True)
    raise NotInvertible(
        f"stage matrix of {t.name!r} is singular and [A; b^T] is rank deficient"
    )


def stability_report(t: ButcherTableau) -> StabilityReport:
    """Compute M = BA + A^T B - b b^T and, when A is invertible, Q = A^{-T} M A^{-1}.

    The method is algebraically stable when the weights are non-negative and M
    is positive semi-definite.  Eigenvalues come from a symmetric eigensolve of
    the explicitly symmetrized matrices.
    """
    B = np.diag(t.b)
    M = B @ t.A + t.A.T @ B - np.outer(t.b, t.b)
    m_eig = np.linalg.eigvalsh((M + M.T) / 2)
    b_nonneg = bool(np.all(t.b >= 0.0))
    stable = b_nonneg and bool(m_eig.min() >= -PSD_TOL)

    Q = None
    q_eig = None
    a_invertible = False
    try:
        inv = invert_stage_matrix(t)
    except NotInvertible:
        inv = None
    if inv is not None and not inv.pseudo:
        a_invertible = True
        Ainv = inv.matrix
        Q = B @ Ainv + Ainv.T @ B - Ainv.T @ np.outer(t.b, t.b) @ Ainv
        q_eig = np.linalg.eigvalsh((Q + Q.T) / 2)

    return StabilityReport(
        Q=Q,
        M=M,
        q_eigenvalues=q_eig,
        m_eigenvalues=m_eig,
        b_nonnegative=b_nonneg,
        algebraically_stable=stable,
        a_invertible=a_invertible,
    )

"""Exception types shared across the package."""


class RKEntropyError(Exception):
    """Base class for all package errors."""


class UnknownScheme(RKEntropyError):
    """Requested scheme name is not in the built-in registry."""


class DegenerateTableau(RKEntropyError):
    """Tableau construction received coefficients that make it singular."""


class NotInvertible(RKEntropyError):
    """Stage matrix is singular and no least-squares inverse exists."""


class DomainViolation(RKEntropyError):
    """A state left the admissible domain of the entropy model."""


class NonConvergence(RKEntropyError):
    """Newton iteration exhausted its budget without meeting the tolerance."""

    def __init__(self, iterations, norm):
        self.iterations = iterations
        self.norm = norm
        super().__init__(
            f"Newton did not converge: defect {norm:.3e} after {iterations} iterations"
        )


class UnsupportedOperator(RKEntropyError):
    """Linear operator assembly requested for a nonlinear or non-periodic setup."""


class NotQuadraticEntropy(RKEntropyError):
    """Quadratic-form check requested for a non-quadratic entropy."""


class NonPositiveWeights(RKEntropyError):
    """CFL bound requires strictly positive quadrature weights."""


class LedgerUnavailable(RKEntropyError):
    """No entropy ledger path exists for this tableau."""

"""Entropy production of implicit Runge-Kutta schemes on entropy-stable grids.

The package couples finite-volume discretizations of 1-d scalar conservation
laws (linear advection, inviscid Burgers) with implicit Runge-Kutta
integrators and computes the exact fully discrete entropy production of every
step, split into temporal and spatial parts.
"""

from .config import RunConfig, default_config, load_config
from .errors import (
    DegenerateTableau,
    DomainViolation,
    LedgerUnavailable,
    NonConvergence,
    NonPositiveWeights,
    NotInvertible,
    NotQuadraticEntropy,
    RKEntropyError,
    UnknownScheme,
    UnsupportedOperator,
)
from .harness import (
    ConvergenceRow,
    RunResult,
    SweepResult,
    converge_global_entropy,
    converge_temporal_production,
    initial_state,
    profile_entropy,
    run,
    sweep_lambda,
    total_entropy,
)
from .ledger import (
    StepLedger,
    cfl_bound,
    cn_ledger,
    gcn_step,
    jump_B,
    jump_E,
    quadratic_form_check,
    step_with_ledger,
)
from .models import Bundle, EntropyModel, eval_bundle
from .solver import SolverSettings, StageSolution, rk_step, solve_stages
from .space import (
    FixedGhost,
    FluxScheme,
    Grid1D,
    GridState,
    Periodic,
    assemble_linear_operator,
    ec_flux,
    interface_entropy,
    make_flux_scheme,
    numerical_flux,
    residual,
)
from .tableau import (
    BUILTIN_NAMES,
    ButcherTableau,
    StabilityReport,
    builtin_tableau,
    dirk_chain,
    invert_stage_matrix,
    stability_report,
)

__version__ = "0.1.0"

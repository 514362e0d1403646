"""Incoherently pumped three-level Λ atom: master equations, steady states, dressed picture."""
from .core import (
    Basis,
    DensityMatrix,
    DerivativeMatrix,
    ObservableSet,
    SystemParams,
    diag_state,
    observables,
    rhs,
    robust_state,
    weak_state,
)
from .dressed import DressedBasis, dressed_rates, to_bare, to_dressed
from .errors import (
    BasisMismatchError,
    LambdaCPTError,
    NumericalError,
    RegimeError,
    StepUnderflowError,
    UniquenessError,
    ValidationError,
)
from .integrator import IntegratorConfig, Method, Trajectory, convergence_time, integrate, step_rk4, step_rk45
from .scenarios import builtin_scenarios, run_scenario, sweep
from .steady import (
    Classification,
    Provenance,
    SteadyStateReport,
    UniquenessReport,
    analytic_cpt,
    build_liouvillian,
    classify,
    degenerate_steady,
    null_space_steady,
    uniqueness,
)

__version__ = "0.1.0"

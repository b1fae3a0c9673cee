"""Bound states of Dirichlet strips coupled through a narrow window."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BracketEmptyError,
    ConstraintDegeneracyError,
    ConvergenceError,
    EnergyOutOfBracketError,
    FactorizationError,
    GeometryError,
    GridMismatchError,
    IncompatibleIntervalError,
    IndefiniteFormError,
    NarrowWindowError,
    TruncationError,
    ValidityError,
)
from .geometry import Geometry, SpectralWindow, eigen_bracket, threshold  # noqa: E402
from .modematch import (  # noqa: E402
    EigenResult,
    ModeMatchingSolver,
    assemble_secular,
    smallest_singular_value,
    solve_ground_state,
)
from .fd import FiniteDifferenceSolver, GridSpec, fd_ground_state  # noqa: E402
from .varbound import TrialFunctionBound, optimize_trial, trial_terms  # noqa: E402
from .constants import build_chain, gamma_constant  # noqa: E402
from .asymptotics import PowerLawFit, sandwich_report, sweep  # noqa: E402

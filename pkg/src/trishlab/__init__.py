"""Inertial dynamics with Tikhonov regularization and Hessian-driven damping.

Simulates the TRIGS / TRISH / TRISHE family of second-order systems, tracks
their Lyapunov energies and estimates empirical convergence rates.
"""
from .analysis import (
    RateFit,
    bounded_scaled_quantity,
    fit_log_linear,
    fit_rate,
    oscillation_count,
    weighted_integral_tail,
)
from .dynamics import (
    DynamicsSpec,
    State,
    Variant,
    acceleration,
    first_order_rhs,
    lift_to_first_order,
    parse_variant,
    trishe_expanded_coefficients,
)
from .errors import (
    BetaZero,
    DomainViolation,
    InfeasibleDelta,
    InsufficientSamples,
    MissingMinNormSolution,
    NonConvergence,
    NonPositiveQuantity,
    ScheduleUnderflow,
    TrishlabError,
    WrongScheduleKind,
)
from .integrate import (
    IntegratorConfig,
    Termination,
    Trajectory,
    integrate_first_order,
    integrate_second_order,
)
from .lyapunov import (
    EnergyRecord,
    FeasibilityMode,
    FeasibilityReport,
    InequalityReport,
    LyapunovParams,
    G_of_t,
    energy_Ep,
    hp_feasible,
    monitor,
    mu_of_t,
)
from .objective import F1, F2, Objective, Quadratic, StronglyConvexQuadratic, get_objective
from .tikhonov import (
    ConstantSchedule,
    CustomSchedule,
    PowerSchedule,
    Schedule,
    ViscosityTracker,
    grad_phi,
    phi,
    schedule_from_config,
    viscosity_point,
)

__version__ = "0.1.0"

"""Right-hand sides of the inertial family and its first-order reformulation.

The unified second-order system is::

    x'' + delta sqrt(eps) x' + beta d/dt[grad phi_t(x) + (p-1) eps x] + grad phi_t(x) = 0

which is TRISH at p = 0, TRISHE at p = 1 and TRIGS when beta = 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import BetaZero, ScheduleUnderflow, WrongScheduleKind
from .objective import Objective
from .tikhonov import PowerSchedule, Schedule


class Variant(enum.Enum):
    TRIGS = "trigs"
    TRISH = "trish"
    TRISHE = "trishe"
    GENERAL_P = "general"


@dataclass(frozen=True)
class DynamicsSpec:
    """Variant and coefficients. TRISH forces p = 0, TRISHE p = 1, TRIGS beta = 0.

    ``regularize=False`` drops the eps(t) x restoring term while keeping the
    delta sqrt(eps) damping; it exists only for the plain heavy-ball check.
    """

    variant: Variant = Variant.TRISH
    delta: float = 3.0
    beta: float = 1.0
    p: float = 0.0
    regularize: bool = True

    def __post_init__(self):
        v = Variant(self.variant)
        object.__setattr__(self, "variant", v)
        if v is Variant.TRISH:
            object.__setattr__(self, "p", 0.0)
        elif v is Variant.TRISHE:
            object.__setattr__(self, "p", 1.0)
        elif v is Variant.TRIGS:
            object.__setattr__(self, "beta", 0.0)
            object.__setattr__(self, "p", 0.0)
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def name(self) -> str:
        if self.variant is Variant.GENERAL_P:
            return f"general:{self.p:g}"
        return self.variant.value

    @property
    def uses_hessian(self) -> bool:
        return self.beta != 0.0

    def theorem_flags(self) -> dict:
        """Advisory checks of the parameter ranges the convergence theorems assume."""
        return {
            "delta_gt_2sqrt(1-p)": bool(self.delta > 2.0 * np.sqrt(1.0 - self.p)),
            "delta_gt_2_for_trish": bool(self.variant is not Variant.TRISH or self.delta > 2.0),
        }


def parse_variant(text: str, delta: float = 3.0, beta: float = 1.0) -> DynamicsSpec:
    """``trigs`` | ``trish`` | ``trishe`` | ``general:<p>``."""
    key = text.strip().lower()
    if key.startswith("general:"):
        try:
            p = float(key.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"invalid variant {text!r}") from None
        return DynamicsSpec(Variant.GENERAL_P, delta, beta, p)
    try:
        v = Variant(key)
    except ValueError:
        raise ValueError(
            f"invalid variant {text!r} (expected trigs, trish, trishe or general:<p>)"
        ) from None
    if v is Variant.GENERAL_P:
        raise ValueError("general variant needs a p value: general:<p>")
    return DynamicsSpec(v, delta, beta)


@dataclass
class State:
    t: float
    x: np.ndarray
    v: np.ndarray = field(default=None)

    def __post_init__(self):
        self.t = float(self.t)
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.zeros_like(self.x) if self.v is None else np.asarray(self.v, dtype=float)


def _eps_terms(sched: Schedule, t: float, strict_positive=True):
    eps = sched.eps(t)
    if strict_positive and not eps > 0.0:
        raise ScheduleUnderflow(f"eps({t}) = {eps} must be positive")
    return eps, sched.eps_dot(t)


def acceleration(spec: DynamicsSpec, obj: Objective, sched: Schedule, state: State) -> np.ndarray:
    """x'' for the unified family; TRIGS (beta = 0) never touches the Hessian."""
    eps, eps_dot = _eps_terms(sched, state.t)
    x, v = state.x, state.v
    g = obj.gradient(x)
    acc = -spec.delta * sched.sqrt_eps(state.t) * v - g
    if spec.regularize:
        acc = acc - eps * x
    if spec.beta != 0.0:
        acc = acc - spec.beta * (obj.hess_vec(x, v) + spec.p * (eps_dot * x + eps * v))
    return acc


def trishe_expanded_coefficients(sched: Schedule, t, delta: float, beta: float):
    """(viscous, state) coefficients of the p = 1 system written out for eps = t^-r."""
    if not isinstance(sched, PowerSchedule):
        raise WrongScheduleKind("expanded coefficients need a power schedule")
    t = sched.check(t)
    r = sched.r
    viscous = delta * t ** (-r / 2.0) + beta * t ** (-r)
    state_coeff = t ** (-r) - r * beta * t ** (-r - 1.0)
    return viscous, state_coeff


def _first_order_coeffs(spec, sched, t):
    if not spec.beta > 0.0:
        raise BetaZero("the first-order reformulation needs beta > 0")
    _eps_terms(sched, t)
    sq = sched.sqrt_eps(t)
    c1 = 1.0 / spec.beta - spec.delta * sq
    c2 = c1 - 0.5 * spec.beta * spec.delta * sched.eps_dot_over_sqrt_eps(t)
    return c1, c2


def first_order_rhs(spec: DynamicsSpec, obj: Objective, sched: Schedule, t, x, y):
    """(x', y') of the first-order system equivalent to the p = 1 dynamics."""
    c1, c2 = _first_order_coeffs(spec, sched, t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gphi = obj.gradient(x) + sched.eps(t) * x
    xdot = -spec.beta * gphi + c1 * x - y / spec.beta
    ydot = c2 * x - y / spec.beta
    return xdot, ydot


def lift_to_first_order(spec: DynamicsSpec, obj: Objective, sched: Schedule, state: State):
    """Initial (x0, y0) for the first-order system, solved from its first equation."""
    c1, _ = _first_order_coeffs(spec, sched, state.t)
    gphi = obj.gradient(state.x) + sched.eps(state.t) * state.x
    b = spec.beta
    y0 = -b * state.v - b * b * gphi + b * c1 * state.x
    return state.x.copy(), y0


def velocity_from_first_order(spec, obj, sched, t, x, y):
    """Recover x' from (x, y) through the first equation."""
    return first_order_rhs(spec, obj, sched, t, x, y)[0]


def pack_kernel_params(spec: DynamicsSpec, obj: Objective, sched: Schedule):
    """fp vector and matrices for the compiled right-hand sides, or None if unsupported."""
    ka = sched.kernel_args()
    if obj.kernel_kind is None or ka is None:
        return None
    kind, A, b = obj.kernel_args()
    fp = np.array([
        float(kind), float(ka[0]), ka[1], spec.delta, spec.beta, spec.p,
        1.0 if spec.uses_hessian else 0.0, 1.0 if spec.regularize else 0.0,
    ])
    return fp, A, b


__all__ = [
    "Variant", "DynamicsSpec", "State", "parse_variant", "acceleration",
    "trishe_expanded_coefficients", "first_order_rhs", "lift_to_first_order",
    "velocity_from_first_order", "pack_kernel_params",
]

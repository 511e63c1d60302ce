"""Tikhonov schedule, the regularized objective phi_t and the viscosity curve."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DomainViolation, NonConvergence, ScheduleUnderflow
from .objective import Objective


# --------------------------------------------------------------------------
# schedules
# --------------------------------------------------------------------------
class Schedule:
    """Nonincreasing C^1 regularization parameter t -> eps(t) >= 0."""

    kind = "custom"
    t_min = 0.0

    def check(self, t: float) -> float:
        t = float(t)
        if not t >= self.t_min:
            raise ScheduleUnderflow(f"t={t} is below t_min={self.t_min}")
        return t

    def eps(self, t):
        raise NotImplementedError

    def eps_dot(self, t):
        raise NotImplementedError

    def sqrt_eps(self, t):
        return math.sqrt(self.eps(t))

    def eps_dot_over_sqrt_eps(self, t):
        return self.eps_dot(t) / self.sqrt_eps(t)

    def kernel_args(self):
        """(kind, parameter) for the compiled loop, or None."""
        return None

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerSchedule(Schedule):
    """eps(t) = t^-r."""

    r: float
    t_min: float = 1e-12
    kind = "power"

    def __post_init__(self):
        if not 0.0 < self.r <= 2.0:
            raise ValueError(f"power schedule needs 0 < r <= 2, got r={self.r}")
        if not self.t_min > 0.0:
            raise ValueError("power schedules need t_min > 0")

    def eps(self, t):
        return self.check(t) ** (-self.r)

    def eps_dot(self, t):
        return -self.r * self.check(t) ** (-self.r - 1.0)

    def sqrt_eps(self, t):
        return self.check(t) ** (-0.5 * self.r)

    def eps_dot_over_sqrt_eps(self, t):
        return -self.r * self.check(t) ** (-0.5 * self.r - 1.0)

    def kernel_args(self):
        return kernels.SCHED_POWER, float(self.r)

    def to_config(self):
        return {"kind": "power", "r": self.r}


@dataclass(frozen=True)
class ConstantSchedule(Schedule):
    """eps(t) = value for all t (a frozen regularization, used in sanity checks)."""

    value: float
    t_min: float = 0.0
    kind = "constant"

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("eps must be nonnegative")

    def eps(self, t):
        self.check(t)
        return float(self.value)

    def eps_dot(self, t):
        self.check(t)
        return 0.0

    def eps_dot_over_sqrt_eps(self, t):
        self.check(t)
        return 0.0

    def kernel_args(self):
        return kernels.SCHED_CONST, float(self.value)

    def to_config(self):
        return {"kind": "constant", "value": self.value}


class CustomSchedule(Schedule):
    """User-supplied eps and its analytic derivative."""

    kind = "custom"

    def __init__(self, eps: Callable[[float], float], eps_dot: Callable[[float], float],
                 t_min: float = 0.0, name: str = "custom"):
        self._eps = eps
        self._eps_dot = eps_dot
        self.t_min = float(t_min)
        self.name = name

    def eps(self, t):
        return float(self._eps(self.check(t)))

    def eps_dot(self, t):
        return float(self._eps_dot(self.check(t)))

    def to_config(self):
        return {"kind": "custom", "name": self.name}


def schedule_from_config(cfg) -> Schedule:
    """Build a schedule from ``{"kind": "power", "r": ...}`` or ``{"kind": "constant", "value": ...}``."""
    if isinstance(cfg, Schedule):
        return cfg
    kind = str(cfg.get("kind", "power")).lower()
    if kind == "power":
        return PowerSchedule(float(cfg["r"]))
    if kind == "constant":
        return ConstantSchedule(float(cfg["value"]))
    raise ValueError(f"unknown schedule kind {kind!r}")


# --------------------------------------------------------------------------
# phi_t
# --------------------------------------------------------------------------
def phi(obj: Objective, sched: Schedule, t, x) -> float:
    eps = sched.eps(t)
    x = np.asarray(x, dtype=float)
    return obj.value(x) + 0.5 * eps * float(x @ x)


def grad_phi(obj: Objective, sched: Schedule, t, x) -> np.ndarray:
    eps = sched.eps(t)
    x = np.asarray(x, dtype=float)
    return obj.gradient(x) + eps * x


# --------------------------------------------------------------------------
# viscosity curve
# --------------------------------------------------------------------------
@dataclass
class ViscosityResult:
    x_eps: np.ndarray
    residual: float
    iterations: int
    eps: float = float("nan")
    method: str = "newton"


def residual_tolerance(eps: float, x) -> float:
    return max(1e-12 * (1.0 + eps) * (1.0 + float(np.linalg.norm(x))), 1e-14)


def _cg(matvec, rhs, tol, maxiter):
    """Conjugate gradients for a symmetric positive definite operator."""
    x = np.zeros_like(rhs)
    r = rhs.copy()
    d = r.copy()
    rr = float(r @ r)
    if math.sqrt(rr) <= tol:
        return x
    for _ in range(maxiter):
        Ad = matvec(d)
        dAd = float(d @ Ad)
        if dAd <= 0.0:
            break
        alpha = rr / dAd
        x += alpha * d
        r -= alpha * Ad
        rr_new = float(r @ r)
        if math.sqrt(rr_new) <= tol:
            break
        d = r + (rr_new / rr) * d
        rr = rr_new
    return x


def _start_point(obj: Objective, x0):
    if x0 is not None:
        x0 = np.array(x0, dtype=float)
        if obj.domain_contains(x0):
            return x0
    z = np.zeros(obj.dim)
    if obj.domain_contains(z):
        return z
    if obj.min_norm_solution is not None and obj.domain_contains(obj.min_norm_solution):
        return obj.min_norm_solution.copy()
    raise DomainViolation("no admissible starting point for the viscosity solve")


def viscosity_point(obj: Objective, eps: float, x0=None, max_newton: int = 200,
                    max_gd: int = 100_000) -> ViscosityResult:
    """Solve grad f(x) + eps x = 0 (the minimizer of f + eps/2 |x|^2).

    Damped Newton with matrix-free CG inner solves; falls back to
    backtracking gradient descent if Newton stalls.
    """
    eps = float(eps)
    if not eps > 0.0:
        raise ValueError("the viscosity curve is only defined for eps > 0")
    x = _start_point(obj, x0)

    def phi_eps(z):
        return obj.value(z) + 0.5 * eps * float(z @ z)

    def gphi(z):
        return obj.gradient(z) + eps * z

    g = gphi(x)
    it = 0
    for it in range(1, max_newton + 1):
        res = float(np.linalg.norm(g))
        if res <= residual_tolerance(eps, x):
            return ViscosityResult(x, res, it - 1, eps)
        d = _cg(lambda u: obj.hess_vec(x, u) + eps * u, -g, 1e-14 * res, 10 * obj.dim + 50)
        slope = float(g @ d)
        if not slope < 0.0:
            d, slope = -g, -res * res
        f0 = phi_eps(x)
        alpha = 1.0
        for _ in range(60):
            xn = x + alpha * d
            if obj.domain_contains(xn):
                gn = gphi(xn)
                if (phi_eps(xn) <= f0 + 1e-4 * alpha * slope
                        or np.linalg.norm(gn) <= 0.5 * res):
                    break
            alpha *= 0.5
        else:
            break
        x, g = xn, gn
    else:
        res = float(np.linalg.norm(g))
        if res <= residual_tolerance(eps, x):
            return ViscosityResult(x, res, max_newton, eps)
    return _gradient_descent(obj, eps, x, max_gd, it)


def _gradient_descent(obj, eps, x, max_steps, offset):
    step = 1.0
    g = obj.gradient(x) + eps * x
    fx = obj.value(x) + 0.5 * eps * float(x @ x)
    for k in range(max_steps):
        res = float(np.linalg.norm(g))
        if res <= residual_tolerance(eps, x):
            return ViscosityResult(x, res, offset + k, eps, method="gradient")
        step *= 2.0
        while True:
            xn = x - step * g
            if obj.domain_contains(xn):
                fn = obj.value(xn) + 0.5 * eps * float(xn @ xn)
                if fn <= fx - 0.5 * step * res * res:
                    break
            step *= 0.5
            if step < 1e-300:
                raise NonConvergence("gradient fallback: line search failed")
        x, fx = xn, fn
        g = obj.gradient(x) + eps * x
    raise NonConvergence(
        f"viscosity solve did not reach tolerance (eps={eps}, residual={np.linalg.norm(g):.3e})"
    )


class ViscosityTracker:
    """Warm-started viscosity solves along one trajectory. Not thread-safe; one per worker."""

    def __init__(self, obj: Objective):
        self.obj = obj
        self._last = None

    def __call__(self, eps: float) -> ViscosityResult:
        res = viscosity_point(self.obj, eps, x0=self._last)
        self._last = res.x_eps
        return res


def envelope_value(obj: Objective, eps: float, x_eps=None) -> float:
    """phi at its minimizer, i.e. the Moreau envelope of f with parameter 1/eps at 0."""
    if x_eps is None:
        x_eps = viscosity_point(obj, eps).x_eps
    return obj.value(x_eps) + 0.5 * eps * float(x_eps @ x_eps)


def viscosity_curve_derivative_bound(obj: Objective, sched: Schedule, t, x_eps=None) -> float:
    """(-eps'/eps) |x_eps(t)|, the Lipschitz bound on t -> x_eps(t)."""
    eps = sched.eps(t)
    if not eps > 0.0:
        raise ScheduleUnderflow("eps(t) must be positive")
    if x_eps is None:
        x_eps = viscosity_point(obj, eps).x_eps
    return -sched.eps_dot(t) / eps * float(np.linalg.norm(x_eps))


def envelope_derivative_identity_check(obj: Objective, sched: Schedule, t, dt):
    """Central difference of s -> phi_s(x_eps(s)) at t against 0.5 eps'(t) |x_eps(t)|^2."""
    t = float(t)
    sched.check(t - dt)

    def env(s):
        e = sched.eps(s)
        return envelope_value(obj, e, viscosity_point(obj, e).x_eps)

    lhs = (env(t + dt) - env(t - dt)) / (2.0 * dt)
    xe = viscosity_point(obj, sched.eps(t)).x_eps
    rhs = 0.5 * sched.eps_dot(t) * float(xe @ xe)
    return lhs, rhs

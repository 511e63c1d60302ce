"""Lyapunov energies, the growth condition on eps and inequality monitors."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import DynamicsSpec, State
from .errors import InfeasibleDelta, MissingMinNormSolution, ScheduleUnderflow
from .objective import Objective
from .tikhonov import PowerSchedule, Schedule, ViscosityTracker


class FeasibilityMode(enum.Enum):
    STRICT_DEFINITION = "strict"
    PROOF_CONSTRAINTS = "proof"


@dataclass(frozen=True)
class LyapunovParams:
    """Energy parameters. ``lambda_=None`` means the midpoint of the admissible interval.

    The auxiliary constant b is always c * lambda / 2 and is not settable.
    """

    lambda_: Optional[float] = None
    a: float = 2.0
    c: float = 4.0
    mode: FeasibilityMode = FeasibilityMode.PROOF_CONSTRAINTS

    def __post_init__(self):
        object.__setattr__(self, "mode", FeasibilityMode(self.mode))
        if not self.a > 1.0:
            raise ValueError("a must exceed 1")
        if not self.c > 2.0:
            raise ValueError("c must exceed 2")
        if self.lambda_ is not None and self.lambda_ < 0.0:
            raise ValueError("lambda must be nonnegative")

    @property
    def b(self) -> Optional[float]:
        return None if self.lambda_ is None else 0.5 * self.c * self.lambda_

    def resolved(self, spec: DynamicsSpec) -> "LyapunovParams":
        """Copy with a concrete lambda (interval midpoint when unset) checked against delta."""
        lam = self.lambda_
        if lam is None:
            rep = hp_feasible(spec.p, spec.delta, LyapunovParams(None, self.a, self.c,
                                                                  FeasibilityMode.PROOF_CONSTRAINTS))
            if rep.empty:
                raise InfeasibleDelta("no admissible lambda for these parameters")
            lam = rep.midpoint
        if not lam < spec.delta:
            raise ValueError(f"lambda={lam} must be below delta={spec.delta}")
        return LyapunovParams(lam, self.a, self.c, self.mode)


# --------------------------------------------------------------------------
# coefficient functions
# --------------------------------------------------------------------------
def _positive_eps(sched, t):
    eps = sched.eps(t)
    if not eps > 0.0:
        raise ScheduleUnderflow(f"eps({t}) must be positive")
    return eps


def mu_of_t(sched: Schedule, delta: float, lambda_: float, t: float) -> float:
    """-eps'/(2 eps) + (delta - lambda) sqrt(eps)."""
    eps = _positive_eps(sched, t)
    return -sched.eps_dot(t) / (2.0 * eps) + (delta - lambda_) * math.sqrt(eps)


def G_of_t(sched: Schedule, spec: DynamicsSpec, params: LyapunovParams, t: float) -> float:
    lam = params.lambda_
    if lam is None:
        raise ValueError("G needs a concrete lambda; call params.resolved(spec) first")
    eps = _positive_eps(sched, t)
    ed = sched.eps_dot(t)
    return ((lam * params.c + 2.0 * params.a) * lam * ed * ed / eps ** 1.5 - ed
            + (1.0 - spec.p) * spec.beta * lam * (spec.delta - lam) * eps * eps)


# --------------------------------------------------------------------------
# energies
# --------------------------------------------------------------------------
def _vp(obj, sched, spec, lam, state, x_eps):
    eps = _positive_eps(sched, state.t)
    g = obj.gradient(state.x)
    ap = g + spec.p * eps * state.x
    return lam * math.sqrt(eps) * (state.x - x_eps) + state.v + spec.beta * ap, ap, g, eps


def _gap(obj, eps, x, x_eps):
    return (obj.value(x) - obj.value(x_eps)) + 0.5 * eps * (float(x @ x) - float(x_eps @ x_eps))


def energy_Ep(obj: Objective, sched: Schedule, spec: DynamicsSpec, params: LyapunovParams,
              state: State, x_eps):
    """Return ``(E_p, |v_p|, gap)`` where gap = phi_t(x) - phi_t(x_eps)."""
    lam = params.resolved(spec).lambda_
    x_eps = np.asarray(x_eps, dtype=float)
    vp, _, _, eps = _vp(obj, sched, spec, lam, state, x_eps)
    gap = _gap(obj, eps, state.x, x_eps)
    vn = float(np.linalg.norm(vp))
    return gap + 0.5 * vn * vn, vn, gap


def calE_p(obj, sched, spec, state, x_eps) -> float:
    """The lambda = 0 energy."""
    x_eps = np.asarray(x_eps, dtype=float)
    vp, _, _, eps = _vp(obj, sched, spec, 0.0, state, x_eps)
    return _gap(obj, eps, state.x, x_eps) + 0.5 * float(vp @ vp)


@dataclass
class EnergyRecord:
    t: float
    E_p: float
    calE_p: float
    vp_norm: float
    gap: float
    mu: float
    G: float
    log_gamma: float
    Ap_norm: float
    gradphi_norm: float
    eps: float
    dist_xeps: float

    @property
    def gamma(self) -> float:
        """exp of the integrated mu from t1; overflows to inf for long runs, use log_gamma."""
        return math.exp(self.log_gamma) if self.log_gamma < 709.0 else math.inf

    @property
    def Wp(self) -> float:
        return self.gamma * self.E_p


# --------------------------------------------------------------------------
# feasibility
# --------------------------------------------------------------------------
@dataclass
class FeasibilityReport:
    mode: FeasibilityMode
    lambda_interval: tuple
    t1: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def empty(self) -> bool:
        lo, hi = self.lambda_interval
        return not lo < hi

    @property
    def midpoint(self) -> float:
        lo, hi = self.lambda_interval
        return 0.5 * (lo + hi)

    def to_dict(self):
        return {"mode": self.mode.value, "lambda_interval": list(self.lambda_interval),
                "empty": self.empty, "t1": self.t1, "notes": list(self.notes)}


def _upper(p, delta, a):
    return min(a * delta / (a + 1.0), 0.5 * (delta + math.sqrt(delta * delta - 4.0 * (1.0 - p))), delta)


def _strict_lower(delta, c):
    s = delta + 1.0 / c
    return 0.5 * (s + math.sqrt(max(s * s - 2.0, 0.0)))


def hp_feasible(p: float, delta: float, params: LyapunovParams = LyapunovParams(),
                sched: Optional[Schedule] = None, beta: float = 1.0,
                t0: float = 1.0) -> FeasibilityReport:
    """Admissible lambda interval of the growth condition and, for power schedules, t1.

    STRICT_DEFINITION evaluates the piecewise bounds literally;
    PROOF_CONSTRAINTS uses delta/2 < lambda < min(a delta/(a+1), (delta + sqrt(delta^2 - 4(1-p)))/2).
    t1 is the smallest t >= t0 with d/dt eps^{-1/2} <= min(2 lambda - delta,
    (delta - (a+1) lambda / a)/2) and delta beta <= eps^{-1/2}; it is found by
    bisection and needs a power schedule.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not delta > 2.0 * math.sqrt(1.0 - p):
        raise InfeasibleDelta(f"delta={delta} must exceed 2 sqrt(1-p)={2 * math.sqrt(1 - p):.6g}")
    a, c = params.a, params.c
    hi = _upper(p, delta, a)
    notes = []
    if params.mode is FeasibilityMode.PROOF_CONSTRAINTS:
        lo = 0.5 * delta
    else:
        if p > 0.5:
            c_min = max(2.0, (1.0 + math.sqrt(2.0 * (1.0 - p))) / (2.0 * p - 1.0))
            if not c > c_min:
                notes.append(f"c={c} does not exceed the required {c_min:.6g}")
                return FeasibilityReport(params.mode, (math.inf, -math.inf), None, notes)
            if delta <= math.sqrt(2.0) - 1.0 / c:
                lo = 0.5 * delta
            else:
                lo = _strict_lower(delta, c)
        else:
            lo = _strict_lower(delta, c)
        lo = max(lo, 0.5 * delta)
        if not lo < hi:
            notes.append(f"lower bound {lo:.6g} is not below upper bound {hi:.6g}")
    rep = FeasibilityReport(params.mode, (lo, hi), None, notes)
    if rep.empty:
        return rep
    lam = params.lambda_ if params.lambda_ is not None else rep.midpoint
    if not lo < lam < hi:
        notes.append(f"lambda={lam} lies outside the interval; t1 not computed")
        return rep
    if sched is None:
        return rep
    if not isinstance(sched, PowerSchedule):
        notes.append("t1 is computed for power schedules only")
        return rep
    rep.t1 = _find_t1(sched.r, delta, lam, a, beta, t0)
    if rep.t1 is None:
        notes.append("the growth condition fails for every t")
    return rep


def _find_t1(r, delta, lam, a, beta, t0, t_max=1e300):
    bound = min(2.0 * lam - delta, 0.5 * (delta - (a + 1.0) * lam / a))

    def ok(t):
        return 0.5 * r * t ** (0.5 * r - 1.0) <= bound and delta * beta <= t ** (0.5 * r)

    if ok(t0):
        return float(t0)
    if not ok(t_max):
        return None
    lo, hi = math.log(t0), math.log(t_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(math.exp(mid)):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            break
    return math.exp(hi)


# --------------------------------------------------------------------------
# monitoring
# --------------------------------------------------------------------------
@dataclass
class InequalityCheck:
    checked: int = 0
    violations: int = 0
    max_violation: float = 0.0
    slack: dict = field(default_factory=dict)

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.checked if self.checked else 0.0

    def add(self, lhs, rhs, tol):
        lhs, rhs, tol = map(np.atleast_1d, (lhs, rhs, tol))
        excess = lhs - rhs
        self.checked += int(excess.size)
        self.violations += int(np.count_nonzero(excess > tol))
        if excess.size:
            self.max_violation = max(self.max_violation, float(np.max(excess, initial=0.0)))


@dataclass
class InequalityReport:
    checks: dict
    t1: float
    lambda_: float
    notes: list = field(default_factory=list)

    def __getitem__(self, name) -> InequalityCheck:
        return self.checks[name]

    @property
    def total_violations(self) -> int:
        return sum(c.violations for c in self.checks.values())

    def to_dict(self):
        out = {name: {"checked": c.checked, "violations": c.violations,
                      "max_violation": c.max_violation, "slack": c.slack}
               for name, c in self.checks.items()}
        out["_meta"] = {"t1": self.t1, "lambda": self.lambda_, "notes": self.notes}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def energy_records(traj, obj, sched, spec, params, t1):
    lam = params.lambda_
    xe_all = traj.columns.get("_x_eps")
    track = ViscosityTracker(obj)
    recs = []
    mus = np.array([mu_of_t(sched, spec.delta, lam, t) for t in traj.t])
    lg = _cumtrapz(mus, traj.t)
    lg -= np.interp(t1, traj.t, lg)
    for i, st in enumerate(traj.states()):
        eps = _positive_eps(sched, st.t)
        xe = xe_all[i] if xe_all is not None else track(eps).x_eps
        vp, ap, g, _ = _vp(obj, sched, spec, lam, st, xe)
        gap = _gap(obj, eps, st.x, xe)
        vn = float(np.linalg.norm(vp))
        recs.append(EnergyRecord(
            t=st.t, E_p=gap + 0.5 * vn * vn, calE_p=calE_p(obj, sched, spec, st, xe),
            vp_norm=vn, gap=gap, mu=float(mus[i]), G=G_of_t(sched, spec, params, st.t),
            log_gamma=float(lg[i]), Ap_norm=float(np.linalg.norm(g + (spec.p - 1.0) * eps * st.x)),
            gradphi_norm=float(np.linalg.norm(g + eps * st.x)), eps=eps,
            dist_xeps=float(np.linalg.norm(st.x - xe)),
        ))
    return recs


def monitor(traj, obj: Objective, sched: Schedule, spec: DynamicsSpec,
            params: LyapunovParams = LyapunovParams(), t1: Optional[float] = None):
    """Energy records at every sample plus a report on the proved inequalities.

    Checked from the first sample at or after t1:
    ``differential``  E_p' + mu E_p + beta (delta - lambda)/(2 delta) |grad phi|^2 <= |x*|^2 G / 2
    ``integrated``    E_p(t) <= |x*|^2/(2 gamma) int G gamma + gamma(t1) E_p(t1) / gamma(t)
    ``gradient_integral``  int |grad phi|^2 <= 2 delta E_p(t1)/(beta (delta-lambda)) + ...
    and at every sample ``fgap_bound`` (f - min f <= E_p + eps |x*|^2 / 2) and
    ``dist_bound`` (|x - x_eps|^2 <= 2 E_p / eps).
    """
    if obj.min_norm_solution is None:
        raise MissingMinNormSolution("monitoring needs the minimum-norm solution x*")
    params = params.resolved(spec)
    lam = params.lambda_
    notes = []
    if t1 is None:
        rep = hp_feasible(spec.p, spec.delta, params, sched, spec.beta, float(traj.t[0]))
        t1 = rep.t1
        notes += rep.notes
        if t1 is None:
            t1 = float(traj.t[0])
            notes.append("t1 unavailable; checks start at the first sample")
    recs = energy_records(traj, obj, sched, spec, params, t1)
    traj.records = recs
    xs2 = float(obj.min_norm_solution @ obj.min_norm_solution)

    t = traj.t
    E = np.array([r.E_p for r in recs])
    mu = np.array([r.mu for r in recs])
    G = np.array([r.G for r in recs])
    gp2 = np.array([r.gradphi_norm for r in recs]) ** 2
    eps = np.array([r.eps for r in recs])
    dist2 = np.array([r.dist_xeps for r in recs]) ** 2

    checks = {
        "differential": InequalityCheck(slack={"abs": 1e-6, "rel": 1e-3}),
        "integrated": InequalityCheck(slack={"abs": 1e-12, "rel": 1e-3}),
        "gradient_integral": InequalityCheck(slack={"abs": 1e-12, "rel": 1e-3}),
        "fgap_bound": InequalityCheck(slack={"abs": 1e-8, "rel": 1e-8}),
        "dist_bound": InequalityCheck(slack={"abs": 1e-8, "rel": 1e-8}),
    }

    if obj.min_value is not None:
        fgap = np.array([obj.value(x) for x in traj.x]) - obj.min_value
        rhs = E + 0.5 * eps * xs2
        checks["fgap_bound"].add(fgap, rhs, 1e-8 + 1e-8 * np.abs(rhs))
    rhs = 2.0 * E / eps
    checks["dist_bound"].add(dist2, rhs, 1e-8 + 1e-8 * np.abs(rhs))

    sel = np.nonzero(t >= t1 * (1.0 - 1e-12))[0]
    if sel.size >= 3:
        ts, Es, Gs, gs, ms = t[sel], E[sel], G[sel], gp2[sel], mu[sel]
        dE = np.gradient(Es, ts)
        lhs = dE + ms * Es + spec.beta * (spec.delta - lam) / (2.0 * spec.delta) * gs
        checks["differential"].add(lhs, 0.5 * xs2 * Gs, 1e-6 + 1e-3 * np.abs(Es))

        # gamma(s)/gamma(t) = exp(L(s) - L(t)); accumulate the weighted integral stably
        L = np.array([recs[i].log_gamma for i in sel])
        L = L - L[0]
        acc = np.zeros(sel.size)
        for k in range(1, sel.size):
            decay = math.exp(-(L[k] - L[k - 1]))
            acc[k] = acc[k - 1] * decay + 0.5 * (Gs[k - 1] * decay + Gs[k]) * (ts[k] - ts[k - 1])
        rhs_b = 0.5 * xs2 * acc + Es[0] * np.exp(-L)
        checks["integrated"].add(Es, rhs_b, 1e-12 + 1e-3 * np.abs(rhs_b))

        if spec.beta > 0.0:
            k = spec.delta / (spec.beta * (spec.delta - lam))
            rhs_c = 2.0 * k * Es[0] + k * xs2 * _cumtrapz(Gs, ts)
            checks["gradient_integral"].add(_cumtrapz(gs, ts), rhs_c, 1e-12 + 1e-3 * np.abs(rhs_c))
        else:
            notes.append("gradient integral bound skipped (beta = 0)")
    else:
        notes.append("fewer than 3 samples after t1; time-dependent checks skipped")

    traj.columns.update({
        "E_p": E, "calE_p": np.array([r.calE_p for r in recs]), "mu": mu, "G": G,
        "vp_norm": np.array([r.vp_norm for r in recs]),
    })
    return recs, InequalityReport(checks, float(t1), lam, notes)

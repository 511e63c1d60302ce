"""Time integration with trajectory recording and CSV serialization."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from ._accel import py_func
from .dynamics import (
    DynamicsSpec,
    State,
    acceleration,
    first_order_rhs,
    pack_kernel_params,
)
from .errors import DomainViolation, ScheduleUnderflow
from .objective import Objective
from .tikhonov import Schedule, ViscosityTracker


class Termination(enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    MAX_STEPS = "MaxSteps"
    DOMAIN_EXIT = "DomainExit"
    STEP_UNDERFLOW = "StepUnderflow"


_STATUS = {
    kernels.STATUS_REACHED: Termination.REACHED_T_END,
    kernels.STATUS_MAX_STEPS: Termination.MAX_STEPS,
    kernels.STATUS_DOMAIN_EXIT: Termination.DOMAIN_EXIT,
    kernels.STATUS_UNDERFLOW: Termination.STEP_UNDERFLOW,
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration and recording policy.

    ``record="log"`` samples ``per_decade`` points per decade of time;
    ``record="fixed"`` samples every ``interval`` time units.
    """

    method: str = "rk45"
    h_init: float = 1e-2
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    t_end: float = 1e4
    record: str = "log"
    per_decade: int = 200
    interval: float = 1.0
    max_steps: int = 20_000_000

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError("method must be 'rk45' or 'rk4'")
        if self.record not in ("log", "fixed"):
            raise ValueError("record must be 'log' or 'fixed'")
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.h_init > 0):
            raise ValueError("tolerances and h_init must be positive")
        if self.max_steps <= 0 or self.per_decade <= 0 or not self.interval > 0:
            raise ValueError("max_steps, per_decade and interval must be positive")

    def record_times(self, t0: float) -> np.ndarray:
        """Sample times after ``t0`` (exclusive) up to and including ``t_end``."""
        t_end = float(self.t_end)
        if not t_end > t0:
            raise ValueError("t_end must exceed the start time")
        if self.record == "log":
            if t0 <= 0:
                raise ValueError("log-spaced recording needs t0 > 0")
            n = int(math.floor(self.per_decade * math.log10(t_end / t0) + 1e-9))
            ts = t0 * 10.0 ** (np.arange(1, n + 1) / self.per_decade)
        else:
            n = int(math.floor((t_end - t0) / self.interval + 1e-9))
            ts = t0 + self.interval * np.arange(1, n + 1)
        ts = ts[ts < t_end * (1.0 - 1e-12)]
        return np.append(ts, t_end)


@dataclass
class Trajectory:
    """Recorded samples of one run.

    ``columns`` holds per-sample diagnostics (fgap, gradnorm, eps, ...);
    ``records`` holds Lyapunov energy records once a monitor pass ran.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    termination: Termination = Termination.REACHED_T_END
    spec: Optional[DynamicsSpec] = None
    y: Optional[np.ndarray] = None
    n_steps: int = 0
    n_rejected: int = 0
    columns: dict = field(default_factory=dict)
    records: Optional[list] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float).reshape(len(self.t), -1)
        self.v = np.asarray(self.v, dtype=float).reshape(len(self.t), -1)

    def __len__(self):
        return len(self.t)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def states(self):
        for i in range(len(self.t)):
            yield State(self.t[i], self.x[i], self.v[i])

    def column(self, name: str) -> np.ndarray:
        if name == "dist_xeps_sq" and "dist_xeps_sq" not in self.columns and "dist_xeps" in self.columns:
            return self.columns["dist_xeps"] ** 2
        try:
            return np.asarray(self.columns[name], dtype=float)
        except KeyError:
            raise KeyError(f"trajectory has no column {name!r}") from None

    # ------------------------------------------------------------------ CSV
    DIAG_COLUMNS = ("fgap", "gradnorm", "eps", "dist_xeps", "dist_xstar",
                    "E_p", "calE_p", "mu", "G", "vp_norm")

    def csv_header(self):
        d = self.dim
        return (["t"] + [f"x{i}" for i in range(d)] + [f"v{i}" for i in range(d)]
                + list(self.DIAG_COLUMNS))

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            diag = [self.columns.get(c) for c in self.DIAG_COLUMNS]
            for i in range(len(self.t)):
                row = [_fmt(self.t[i])]
                row += [_fmt(a) for a in self.x[i]]
                row += [_fmt(a) for a in self.v[i]]
                row += ["" if col is None else _fmt(col[i]) for col in diag]
                w.writerow(row)
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        d = sum(1 for h in header if h.startswith("x") and h[1:].isdigit())
        idx = {h: i for i, h in enumerate(header)}
        t = np.array([float(r[0]) for r in body])
        x = np.array([[float(r[idx[f"x{i}"]]) for i in range(d)] for r in body])
        v = np.array([[float(r[idx[f"v{i}"]]) for i in range(d)] for r in body])
        cols = {}
        for name in cls.DIAG_COLUMNS:
            if name in idx:
                vals = [r[idx[name]] for r in body]
                if any(s != "" for s in vals):
                    cols[name] = np.array([float(s) if s != "" else np.nan for s in vals])
        return cls(t, x, v, columns=cols)


def _fmt(v) -> str:
    v = float(v)
    return format(v, ".17g")


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------
def _run_loop(rhs, fp, A, b, t0, z0, cfg: IntegratorConfig, compiled: bool):
    rec = cfg.record_times(t0)
    if cfg.method == "rk45":
        loop = kernels.rk45_loop if compiled else py_func(kernels.rk45_loop)
        out = loop(rhs, float(t0), z0, float(cfg.t_end), rec, float(cfg.h_init),
                   float(cfg.abs_tol), float(cfg.rel_tol), int(cfg.max_steps), fp, A, b)
    else:
        loop = kernels.rk4_loop if compiled else py_func(kernels.rk4_loop)
        out = loop(rhs, float(t0), z0, float(cfg.t_end), rec, float(cfg.h_init),
                   int(cfg.max_steps), fp, A, b)
    ts, zs, n_rec, status, steps, rejected = out
    return ts[:n_rec].copy(), zs[:n_rec].copy(), _STATUS[int(status)], int(steps), int(rejected)


_DUMMY = (np.zeros(8), np.zeros((1, 1)), np.zeros(1))


def _python_rhs(fn, n):
    def rhs(t, z, fp, A, b):
        try:
            out = fn(t, z[:n], z[n:])
        except (DomainViolation, ScheduleUnderflow, FloatingPointError):
            return np.full(2 * n, np.nan)
        return np.concatenate(out)
    return rhs


def _choose(spec, obj, sched, backend):
    packed = pack_kernel_params(spec, obj, sched) if backend in ("auto", "kernel") else None
    if backend == "kernel" and packed is None:
        raise ValueError("kernel backend needs a builtin objective and a power/constant schedule")
    return packed


def integrate_second_order(spec: DynamicsSpec, obj: Objective, sched: Schedule, init: State,
                           cfg: IntegratorConfig = IntegratorConfig(), diagnostics: bool = True,
                           backend: str = "auto") -> Trajectory:
    """Integrate the second-order system from ``init``.

    ``backend="auto"`` uses the compiled kernel loop for builtin objectives
    and power/constant schedules, and the interpreted loop with Python
    callbacks otherwise; ``"python"`` forces the latter.
    """
    if not init.t >= sched.t_min or init.t <= 0.0 and sched.kind == "power":
        raise ScheduleUnderflow("initial time below the schedule's t_min")
    if not obj.domain_contains(init.x):
        raise DomainViolation("initial point outside the objective domain")
    n = obj.dim
    z0 = np.concatenate([init.x, init.v]).astype(float)
    packed = _choose(spec, obj, sched, backend)
    if packed is not None:
        fp, A, b = packed
        ts, zs, term, steps, rej = _run_loop(kernels.rhs_second_order, fp, A, b, init.t, z0, cfg, True)
    else:
        rhs = _python_rhs(
            lambda t, x, v: (v, acceleration(spec, obj, sched, State(t, x, v))), n)
        ts, zs, term, steps, rej = _run_loop(rhs, *_DUMMY, init.t, z0, cfg, False)
    traj = Trajectory(ts, zs[:, :n], zs[:, n:], term, spec, n_steps=steps, n_rejected=rej)
    if diagnostics:
        annotate(traj, obj, sched)
    return traj


def integrate_first_order(spec: DynamicsSpec, obj: Objective, sched: Schedule, x0, y0,
                          cfg: IntegratorConfig = IntegratorConfig(), t0: float = 1.0,
                          diagnostics: bool = True, backend: str = "auto") -> Trajectory:
    """Integrate the (x, y) reformulation of the p = 1 system; v is reconstructed."""
    if spec.p != 1.0:
        raise ValueError("the first-order reformulation covers the p = 1 system only")
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    first_order_rhs(spec, obj, sched, t0, x0, y0)  # validates beta, t0 and domain
    n = obj.dim
    z0 = np.concatenate([x0, y0])
    packed = _choose(spec, obj, sched, backend)
    if packed is not None:
        fp, A, b = packed
        ts, zs, term, steps, rej = _run_loop(kernels.rhs_first_order, fp, A, b, t0, z0, cfg, True)
    else:
        rhs = _python_rhs(lambda t, x, y: first_order_rhs(spec, obj, sched, t, x, y), n)
        ts, zs, term, steps, rej = _run_loop(rhs, *_DUMMY, t0, z0, cfg, False)
    xs, ys = zs[:, :n], zs[:, n:]
    vs = np.array([first_order_rhs(spec, obj, sched, t, x, y)[0] for t, x, y in zip(ts, xs, ys)])
    traj = Trajectory(ts, xs, vs.reshape(len(ts), n), term, spec, y=ys, n_steps=steps, n_rejected=rej)
    if diagnostics:
        annotate(traj, obj, sched)
    return traj


def annotate(traj: Trajectory, obj: Objective, sched: Schedule) -> Trajectory:
    """Fill the per-sample diagnostic columns (one viscosity solve per sample)."""
    m = len(traj)
    beta = traj.spec.beta if traj.spec is not None else 0.0
    eps = np.array([sched.eps(t) for t in traj.t])
    grads = np.array([obj.gradient(x) for x in traj.x]).reshape(m, -1)
    cols = {
        "eps": eps,
        "gradnorm": np.linalg.norm(grads, axis=1),
        "velnorm": np.linalg.norm(traj.v, axis=1),
        "vel_grad_combo": np.linalg.norm(traj.v + beta * grads, axis=1),
        "dfgap": np.einsum("ij,ij->i", grads, traj.v),
    }
    if obj.min_value is not None:
        cols["fgap"] = np.array([obj.value(x) for x in traj.x]) - obj.min_value
    if obj.min_norm_solution is not None:
        cols["dist_xstar"] = np.linalg.norm(traj.x - obj.min_norm_solution, axis=1)
    if np.all(eps > 0):
        track = ViscosityTracker(obj)
        xe = np.array([track(e).x_eps for e in eps]).reshape(m, -1)
        cols["dist_xeps"] = np.linalg.norm(traj.x - xe, axis=1)
        cols["dist_xeps_sq"] = cols["dist_xeps"] ** 2
        cols["_x_eps"] = xe
    traj.columns.update(cols)
    return traj

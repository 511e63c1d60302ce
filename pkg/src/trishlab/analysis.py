"""Empirical rates, bounded scaled quantities and integral tails from trajectories."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .errors import InsufficientSamples, NonPositiveQuantity
from .integrate import Trajectory

MIN_SAMPLES = 20
BOUNDED_RATIO = 3.0

QUANTITIES = ("fgap", "dist_xeps_sq", "dist_xstar", "vel_grad_combo", "gradnorm")


def synthetic_trajectory(t, **columns) -> Trajectory:
    """A trajectory carrying only sample times and named columns (x = v = 0)."""
    t = np.asarray(t, dtype=float)
    z = np.zeros((len(t), 1))
    return Trajectory(t, z, z, columns={k: np.asarray(v, dtype=float) for k, v in columns.items()})


def _series(traj: Trajectory, quantity: Union[str, np.ndarray]):
    if isinstance(quantity, str):
        return quantity, traj.column(quantity)
    q = np.asarray(quantity, dtype=float)
    if q.shape != traj.t.shape:
        raise ValueError("quantity array must match the sample times")
    return "custom", q


def _window(traj, window):
    if window is None:
        hi = float(traj.t[-1])
        return hi / 100.0, hi
    lo, hi = map(float, window)
    if not lo < hi:
        raise ValueError("window needs t_lo < t_hi")
    return lo, hi


def _in(t, lo, hi):
    tol = 1e-12
    return (t >= lo * (1.0 - tol)) & (t <= hi * (1.0 + tol))


@dataclass
class RateFit:
    quantity: str
    window: tuple
    slope: float
    intercept: float
    r2: float
    n_samples: int
    envelope: bool = False

    def to_dict(self):
        return asdict(self)


def _usable(t, q, lo, hi, name):
    m = _in(t, lo, hi) & np.isfinite(q)
    if np.count_nonzero(m) < MIN_SAMPLES:
        raise InsufficientSamples(f"{np.count_nonzero(m)} samples in [{lo:g}, {hi:g}], need {MIN_SAMPLES}")
    m &= q > 0.0
    if np.count_nonzero(m) < MIN_SAMPLES:
        raise NonPositiveQuantity(f"only {np.count_nonzero(m)} positive samples of {name}")
    return t[m], q[m]


def _linfit(X, Y):
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def envelope_maxima(t, q, bins_per_decade: int = 10):
    """Maximum of q (and its time) in each logarithmic bin."""
    lt = np.log10(t)
    idx = np.floor((lt - lt[0]) * bins_per_decade + 1e-9).astype(int)
    ts, qs = [], []
    for k in np.unique(idx):
        m = idx == k
        j = np.argmax(q[m])
        ts.append(t[m][j])
        qs.append(q[m][j])
    return np.array(ts), np.array(qs)


def fit_rate(traj: Trajectory, quantity, window=None, envelope: bool = False,
             bins_per_decade: int = 10) -> RateFit:
    """Least-squares slope of log(quantity) against log(t) over ``window``.

    Only positive values enter the fit. With ``envelope=True`` the fit uses
    the per-bin maxima, which suits oscillating quantities.
    """
    name, q = _series(traj, quantity)
    lo, hi = _window(traj, window)
    t, y = _usable(traj.t, q, lo, hi, name)
    if envelope:
        t, y = envelope_maxima(t, y, bins_per_decade)
        if len(t) < 2:
            raise InsufficientSamples("too few envelope bins")
    return RateFit(name, (lo, hi), *_linfit(np.log(t), np.log(y)), int(len(t)), envelope)


def fit_log_linear(traj: Trajectory, quantity, window) -> RateFit:
    """Slope of log(quantity) against t, the exponential decay rate."""
    name, q = _series(traj, quantity)
    lo, hi = _window(traj, window)
    t, y = _usable(traj.t, q, lo, hi, name)
    return RateFit(name, (lo, hi), *_linfit(t, np.log(y)), int(len(t)))


@dataclass
class ScaledBound:
    quantity: str
    exponent: float
    window: tuple
    max_first_decade: float
    max_last_decade: float
    ratio: float

    @property
    def bounded(self) -> bool:
        return self.ratio <= BOUNDED_RATIO

    def to_dict(self):
        d = asdict(self)
        d["bounded"] = self.bounded
        return d


def bounded_scaled_quantity(traj: Trajectory, quantity, exponent: float, window=None) -> ScaledBound:
    """Compare the maxima of t^exponent * quantity over the first and last decade of ``window``.

    The default window is the last two decades of the run.
    """
    name, q = _series(traj, quantity)
    lo, hi = _window(traj, window)
    if math.log10(hi / lo) < 2.0 - 1e-9:
        raise InsufficientSamples("window must span at least two decades")
    s = traj.t ** exponent * q
    first = _in(traj.t, lo, 10.0 * lo) & np.isfinite(s)
    last = _in(traj.t, hi / 10.0, hi) & np.isfinite(s)
    if not first.any() or not last.any():
        raise InsufficientSamples("no samples in the first or last decade of the window")
    a, b = float(s[first].max()), float(s[last].max())
    if a > 0.0:
        ratio = b / a
    else:
        ratio = 1.0 if b <= 0.0 else math.inf
    return ScaledBound(name, float(exponent), (lo, hi), a, b, ratio)


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x))) if len(x) > 1 else 0.0


def weighted_integral_tail(traj: Trajectory, weight_exponent: float, quantity,
                           split: Optional[float] = None, window=None) -> dict:
    """Trapezoid integral of t^weight * quantity^2 and the share past ``split``.

    ``split`` defaults to one decade before the last sample.
    """
    name, q = _series(traj, quantity)
    lo = float(traj.t[0]) if window is None else float(window[0])
    hi = float(traj.t[-1]) if window is None else float(window[1])
    m = _in(traj.t, lo, hi)
    if np.count_nonzero(m) < 2:
        raise InsufficientSamples("need at least two samples to integrate")
    t = traj.t[m]
    f = t ** weight_exponent * q[m] ** 2
    split = hi / 10.0 if split is None else float(split)
    total = _trapz(f, t)
    # integrate the tail from split exactly, interpolating the integrand there
    ts = np.concatenate([[split], t[t > split]])
    fs = np.concatenate([[np.interp(split, t, f)], f[t > split]])
    tail = _trapz(fs, ts) if split < t[-1] else 0.0
    frac = tail / total if total > 0.0 else 0.0
    return {"quantity": name, "weight_exponent": float(weight_exponent), "split": split,
            "total": total, "tail": tail, "tail_fraction": frac}


def oscillation_count(traj: Trajectory, window=None) -> int:
    """Sign changes of d/dt (f - min f) = <grad f(x), v> over ``window`` (all samples by default)."""
    d = traj.column("dfgap")
    m = np.ones(len(traj), bool) if window is None else _in(traj.t, *window)
    s = np.sign(d[m])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------
def predicted_exponents(r: float) -> dict:
    """Decay exponents of the O-bounds for eps = t^-r."""
    return {"fgap": r, "dist_xeps_sq": (2.0 - r) / 2.0, "vel_grad_combo": (r + 2.0) / 4.0}


def rate_report(traj: Trajectory, r: Optional[float] = None, variant: Optional[str] = None,
                window=None) -> dict:
    """Slopes for every available quantity, plus bounded-ratio checks when r is known."""
    out = {"window": list(_window(traj, window)), "fits": {}, "bounded": {}, "notes": []}
    for name in QUANTITIES:
        try:
            fit = fit_rate(traj, name, window, envelope=(name == "gradnorm"))
        except (KeyError, InsufficientSamples) as exc:
            out["notes"].append(f"{name}: {exc}")
            continue
        out["fits"][name] = fit.to_dict()
    if r is not None:
        for name, e in predicted_exponents(r).items():
            try:
                out["bounded"][name] = bounded_scaled_quantity(traj, name, e, window).to_dict()
            except (KeyError, InsufficientSamples) as exc:
                out["notes"].append(f"{name} bound: {exc}")
            if name in out["fits"]:
                out["fits"][name]["predicted_slope"] = -e
        if variant == "trish" and r < 1.0:
            out["notes"].append(
                "r < 1 for TRISH: the general rate statement allows 0 < r < 2 while the detailed "
                "estimates assume 1 <= r < 2; treat these predictions as unconfirmed")
    return out


def format_table(rows, columns) -> str:
    """Fixed-width text table; ``rows`` are dicts keyed by ``columns``."""
    def cell(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)
    body = [[cell(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c) for i, c in enumerate(columns)]
    line = "  ".join(c.ljust(w) for c, w in zip(columns, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(out)


def report_table(report: dict) -> str:
    rows = []
    for name, fit in report["fits"].items():
        row = {"quantity": name, "slope": fit["slope"], "r2": fit["r2"],
               "predicted": fit.get("predicted_slope", "")}
        b = report["bounded"].get(name)
        if b:
            row["ratio"] = b["ratio"]
            row["bounded"] = "yes" if b["bounded"] else "NO"
        rows.append(row)
    text = format_table(rows, ["quantity", "slope", "predicted", "r2", "ratio", "bounded"])
    if report["notes"]:
        text += "\n" + "\n".join(f"note: {n}" for n in report["notes"])
    return text


def report_json(report: dict, **kw) -> str:
    return json.dumps(report, **kw)

"""Command-line experiment runner: ``trishlab run|compare|verify|rates``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from ._accel import worker_count
from .acceptance import SUITES, run_suite
from .dynamics import State, parse_variant
from .errors import TrishlabError
from .integrate import IntegratorConfig, Trajectory, integrate_second_order
from .lyapunov import FeasibilityMode, LyapunovParams, hp_feasible, monitor
from .objective import get_objective
from .svg import write_loglog_svg
from .tikhonov import schedule_from_config

DEFAULTS = {
    "objective": "f2", "objective_params": {}, "variant": "trish", "r": 1.5,
    "delta": 3.0, "beta": 1.0, "t0": 1.0, "t_end": 1e4, "x0": None, "v0": None,
    "monitor": False, "lyapunov_mode": "proof", "lambda": None, "a": 2.0, "c": 4.0,
    "out": None, "method": "rk45", "abs_tol": 1e-9, "rel_tol": 1e-9, "h_init": 1e-2,
    "record": "log", "per_decade": 200, "interval": 1.0, "max_steps": 20_000_000,
    "schedule": None,
}
COMPARE_DEFAULTS = {"t_end": 1e3, "record": "fixed", "interval": 0.1,
                    "variants": "trigs,trish,trishe", "out": "compare_out"}
PLOT_QUANTITIES = ("fgap", "dist_xstar", "gradnorm")


class UsageError(Exception):
    """Bad user input; reported with exit code 2."""


def _vector(text):
    if text is None or isinstance(text, (list, tuple)):
        return text
    try:
        return [float(s) for s in str(text).replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_run_flags(p):
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--objective", help="f1 | f2 | quadratic (quadratic reads A, b from the config)")
    p.add_argument("--variant", help="trigs | trish | trishe | general:<p>")
    p.add_argument("--r", type=float, help="power-schedule exponent, eps(t) = t^-r")
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--x0", type=_vector, help="comma-separated, e.g. --x0=3,-2")
    p.add_argument("--v0", type=_vector, help="comma-separated; zero by default")
    p.add_argument("--method", choices=["rk45", "rk4"])
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--h-init", dest="h_init", type=float)
    p.add_argument("--record", choices=["log", "fixed"])
    p.add_argument("--per-decade", dest="per_decade", type=int)
    p.add_argument("--interval", type=float)
    p.add_argument("--out")


def _settings(args, extra_defaults=None) -> dict:
    s = dict(DEFAULTS)
    s.update(extra_defaults or {})
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        s.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command", "func"):
            if isinstance(v, bool) and not v and k in s:
                continue
            s[k] = v
    return s


def _build(s):
    try:
        obj = get_objective(s["objective"], **(s.get("objective_params") or {}))
        spec = parse_variant(str(s["variant"]), float(s["delta"]), float(s["beta"]))
        sched = schedule_from_config(s["schedule"] or {"kind": "power", "r": s["r"]})
        cfg = IntegratorConfig(method=s["method"], h_init=float(s["h_init"]),
                               abs_tol=float(s["abs_tol"]), rel_tol=float(s["rel_tol"]),
                               t_end=float(s["t_end"]), record=s["record"],
                               per_decade=int(s["per_decade"]), interval=float(s["interval"]),
                               max_steps=int(s["max_steps"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    x0 = _vector(s["x0"])
    if x0 is None:
        x0 = [0.5] * obj.dim if obj.name == "f1" else ([3.0, -2.0] if obj.dim == 2 else [1.0] * obj.dim)
    v0 = _vector(s["v0"]) or [0.0] * obj.dim
    if len(x0) != obj.dim or len(v0) != obj.dim:
        raise UsageError(f"x0 and v0 need {obj.dim} components")
    if obj.name == "f1" and min(x0) < -0.9:
        raise UsageError("f1 runs must start at least 0.1 inside the domain (x_i >= -0.9)")
    t0 = float(s["t0"])
    if not t0 >= sched.t_min or not float(s["t_end"]) > t0:
        raise UsageError("need t_min <= t0 < t_end")
    return obj, spec, sched, cfg, State(t0, x0, v0)


def _lyapunov_params(s):
    mode = {"strict": FeasibilityMode.STRICT_DEFINITION,
            "proof": FeasibilityMode.PROOF_CONSTRAINTS}.get(str(s["lyapunov_mode"]).lower())
    if mode is None:
        raise UsageError("--lyapunov-mode must be 'strict' or 'proof'")
    lam = s.get("lambda")
    return LyapunovParams(None if lam is None else float(lam), float(s["a"]), float(s["c"]), mode)


def _run_one(s):
    obj, spec, sched, cfg, init = _build(s)
    traj = integrate_second_order(spec, obj, sched, init, cfg)
    report = {"termination": traj.termination.value, "steps": traj.n_steps,
              "rejected": traj.n_rejected, "variant": spec.name,
              "theorem_flags": spec.theorem_flags()}
    if s["monitor"]:
        params = _lyapunov_params(s)
        feas = hp_feasible(spec.p, spec.delta, params, sched, spec.beta, init.t)
        report["feasibility"] = feas.to_dict()
        run_params = LyapunovParams(params.lambda_, params.a, params.c)
        if feas.empty and params.lambda_ is None:
            report["feasibility"]["notes"].append("monitoring uses the proof-constraint lambda")
        _, ineq = monitor(traj, obj, sched, spec, run_params)
        report["inequalities"] = ineq.to_dict()
    return traj, report


def cmd_run(args) -> int:
    s = _settings(args)
    traj, report = _run_one(s)
    out = Path(s["out"] or "trajectory.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out)
    if s["monitor"]:
        out.with_suffix(".report.json").write_text(json.dumps(report, indent=2) + "\n")
    fg = traj.columns.get("fgap")
    print(f"termination: {report['termination']}  samples: {len(traj)}  steps: {traj.n_steps}")
    if fg is not None:
        print(f"fgap: {fg[0]:.6g} -> {fg[-1]:.6g}")
    if s["monitor"]:
        for name, c in report["inequalities"].items():
            if not name.startswith("_"):
                print(f"  {name}: {c['violations']}/{c['checked']} violations")
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    s = _settings(args, COMPARE_DEFAULTS)
    names = [v.strip() for v in str(s["variants"]).split(",") if v.strip()]
    if not names:
        raise UsageError("no variants given")
    configs = [dict(s, variant=v) for v in names]
    for c in configs:
        _build(c)  # validate everything before starting work
    with ThreadPoolExecutor(worker_count(len(configs))) as pool:
        results = list(pool.map(lambda c: _run_one(dict(c, monitor=False)), configs))
    labels = []
    for v in names:
        lab = v if v not in labels else f"{v}#{len(labels) + 1}"
        labels.append(lab)
    trajs = {lab: tr for lab, (tr, _) in zip(labels, results)}

    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_aligned(out / "compare.csv", trajs)
    for q in PLOT_QUANTITIES:
        series = {lab: (tr.t, tr.columns[q]) for lab, tr in trajs.items() if q in tr.columns}
        write_loglog_svg(out / f"{q}.svg", series, title=f"{q} vs t", ylabel=q)
    summary = {}
    for lab, tr in trajs.items():
        summary[lab] = {"termination": tr.termination.value,
                        "oscillations": analysis.oscillation_count(tr),
                        "final_fgap": float(tr.columns["fgap"][-1]) if "fgap" in tr.columns else None}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    rows = [dict(variant=lab, **v) for lab, v in summary.items()]
    print(analysis.format_table(rows, ["variant", "oscillations", "final_fgap", "termination"]))
    print(f"wrote {out}")
    return 0


def _write_aligned(path, trajs):
    first = next(iter(trajs.values()))
    n = min(len(tr) for tr in trajs.values())
    header = ["t"] + [f"{q}_{lab}" for lab in trajs for q in PLOT_QUANTITIES]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(n):
            row = [format(first.t[i], ".17g")]
            for tr in trajs.values():
                for q in PLOT_QUANTITIES:
                    col = tr.columns.get(q)
                    row.append("" if col is None else format(float(col[i]), ".17g"))
            w.writerow(row)


def cmd_verify(args) -> int:
    results = run_suite(args.suite, echo=print)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return 0 if n_pass == len(results) else 1


def cmd_rates(args) -> int:
    try:
        traj = Trajectory.from_csv(args.csv)
    except (OSError, ValueError, IndexError, KeyError) as exc:
        raise UsageError(f"cannot read {args.csv}: {exc}") from None
    if args.objective:
        obj = get_objective(args.objective)
        g = np.array([obj.gradient(x) for x in traj.x])
        traj.columns["vel_grad_combo"] = np.linalg.norm(traj.v + args.beta * g, axis=1)
    window = tuple(args.window) if args.window else None
    if window is not None and len(window) != 2:
        raise UsageError("--window needs two numbers: lo,hi")
    variant = parse_variant(args.variant).name if args.variant else None
    rep = analysis.rate_report(traj, args.r, variant, window)
    print(analysis.report_table(rep))
    if args.json:
        Path(args.json).write_text(analysis.report_json(rep, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trishlab", description="Inertial Tikhonov dynamics experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one trajectory and write CSV")
    _add_run_flags(r)
    r.add_argument("--monitor", action="store_true", default=None, help="compute Lyapunov energies and checks")
    r.add_argument("--lyapunov-mode", dest="lyapunov_mode", choices=["strict", "proof"])
    r.add_argument("--lambda", dest="lambda", type=float)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several variants and plot them together")
    _add_run_flags(c)
    c.add_argument("--variants", help="comma-separated variant list (default trigs,trish,trishe)")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("rates", help="fit convergence rates on an existing CSV")
    q.add_argument("csv")
    q.add_argument("--r", type=float, help="schedule exponent for predicted rates")
    q.add_argument("--variant")
    q.add_argument("--objective", help="recompute |x' + beta grad f| with this objective")
    q.add_argument("--beta", type=float, default=1.0)
    q.add_argument("--window", type=_vector, help="lo,hi")
    q.add_argument("--json", help="write the report as JSON")
    q.set_defaults(func=cmd_rates)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"trishlab: error: {exc}", file=sys.stderr)
        return 2
    except (TrishlabError, ValueError, OSError) as exc:
        print(f"trishlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trishlab import (F2, ConstantSchedule, DynamicsSpec, FeasibilityMode, InfeasibleDelta,
                      IntegratorConfig, LyapunovParams, MissingMinNormSolution, Objective,
                      PowerSchedule, Quadratic, State, Variant, G_of_t, energy_Ep, hp_feasible,
                      integrate_second_order, monitor, mu_of_t, viscosity_point)
from trishlab.lyapunov import calE_p

S1 = PowerSchedule(1.0)
STRICT = FeasibilityMode.STRICT_DEFINITION


def test_params_validation():
    for bad in (dict(a=1.0), dict(c=2.0), dict(lambda_=-0.1)):
        with pytest.raises(ValueError):
            LyapunovParams(**bad)
    p = LyapunovParams(lambda_=1.6)
    assert p.b == pytest.approx(3.2)
    with pytest.raises(ValueError):
        LyapunovParams(lambda_=3.0).resolved(DynamicsSpec(Variant.TRISH, 3.0))
    assert LyapunovParams().resolved(DynamicsSpec(Variant.TRISHE, 3.0)).lambda_ == 1.75


def test_energy_zero_at_constructed_point():
    for v in ("trish", "trishe"):
        spec = DynamicsSpec(Variant(v), 3.0, 1.0)
        t = 4.0
        eps = S1.eps(t)
        xe = viscosity_point(F2(), eps).x_eps
        v0 = -spec.beta * (spec.p - 1.0) * eps * xe
        E, vn, gap = energy_Ep(F2(), S1, spec, LyapunovParams(1.7), State(t, xe, v0), xe)
        assert abs(E) <= 1e-20 and abs(gap) <= 1e-20 and vn <= 1e-12


def test_energy_hand_example():
    spec = DynamicsSpec(Variant.TRIGS, 3.0)
    E, vn, gap = energy_Ep(Quadratic(np.eye(2)), ConstantSchedule(1.0), spec, LyapunovParams(1.0),
                           State(1.0, [1.0, 0.0]), np.zeros(2))
    assert (E, vn, gap) == pytest.approx((1.5, 1.0, 1.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(1, 100))
def test_lambda_zero_collapse(a, b, c, d, t):
    spec = DynamicsSpec(Variant.TRISHE, 3.0, 1.0)
    xe = viscosity_point(F2(), S1.eps(t)).x_eps
    state = State(t, [a, b], [c, d])
    E, _, gap = energy_Ep(F2(), S1, spec, LyapunovParams(0.0), state, xe)
    assert abs(E - calE_p(F2(), S1, spec, state, xe)) <= 1e-15 * max(1.0, abs(E))
    assert E >= gap >= 0.5 * S1.eps(t) * np.sum((state.x - xe) ** 2) - 1e-12


def test_mu_examples():
    assert mu_of_t(S1, 3.0, 2.0, 4.0) == pytest.approx(0.625)
    assert mu_of_t(S1, 3.0, 3.0, 4.0) == pytest.approx(0.125)
    assert mu_of_t(ConstantSchedule(0.25), 3.0, 1.0, 7.0) == pytest.approx(1.0)


def test_G_examples():
    p1 = DynamicsSpec(Variant.TRISHE, 3.0, 5.0)
    assert G_of_t(S1, p1, LyapunovParams(2.0), 1.0) == pytest.approx(25.0)
    p0 = DynamicsSpec(Variant.TRISH, 3.0, 1.0)
    t = 3.0
    extra = 1.0 * 2.0 * 1.0 * S1.eps(t) ** 2
    assert G_of_t(S1, p0, LyapunovParams(2.0), t) - G_of_t(S1, DynamicsSpec(Variant.TRISHE, 3.0, 1.0),
                                                          LyapunovParams(2.0), t) == pytest.approx(extra)
    for r in (0.5, 1.0, 1.5, 1.9):
        assert 0.0 < G_of_t(PowerSchedule(r), p0, LyapunovParams(1.75), 1e6) < 1e-2


def test_feasibility_strict_is_empty():
    rep = hp_feasible(1.0, 3.0, LyapunovParams(a=2, c=4, mode=STRICT))
    assert rep.empty
    assert rep.lambda_interval[0] == pytest.approx(0.5 * (3.25 + math.sqrt(8.5625)))
    assert rep.lambda_interval[1] == pytest.approx(2.0)


def test_feasibility_proof_interval_and_t1():
    rep = hp_feasible(1.0, 3.0, LyapunovParams(a=2, c=4), S1, beta=1.0)
    assert rep.lambda_interval == pytest.approx((1.5, 2.0))
    assert rep.t1 == pytest.approx(9.0) and rep.t1 >= 9.0 - 1e-9
    assert hp_feasible(1.0, 3.0, LyapunovParams(), PowerSchedule(1.5)).t1 == pytest.approx(256.0)
    assert hp_feasible(1.0, 3.0, LyapunovParams(), PowerSchedule(2.0)).t1 is None
    assert hp_feasible(0.0, 3.0, LyapunovParams()).lambda_interval == pytest.approx((1.5, 2.0))


def test_feasibility_strict_small_delta_branch():
    # p > 1/2 and delta below sqrt(2) - 1/c: lower bound is delta/2
    rep = hp_feasible(0.9, 0.9, LyapunovParams(a=2, c=40, mode=STRICT))
    assert rep.lambda_interval[0] == pytest.approx(0.45)
    rep = hp_feasible(0.6, 3.0, LyapunovParams(c=3, mode=STRICT))
    assert rep.empty and "c=3" in rep.notes[0]


def test_infeasible_delta():
    with pytest.raises(InfeasibleDelta):
        hp_feasible(0.0, 2.0, LyapunovParams())
    with pytest.raises(InfeasibleDelta):
        hp_feasible(0.75, 1.0, LyapunovParams())


def test_monitor_zero_minimizer_quadratic():
    spec = DynamicsSpec(Variant.TRISH, 3.0, 1.0)
    obj = Quadratic(np.eye(2))
    tr = integrate_second_order(spec, obj, PowerSchedule(1.0), State(1.0, [1.0, -0.5]),
                                IntegratorConfig(t_end=1e3))
    recs, rep = monitor(tr, obj, PowerSchedule(1.0), spec, LyapunovParams())
    assert rep["differential"].violations == 0
    assert all(r.E_p >= r.gap >= 0.0 for r in recs)


def test_monitor_trishe_r1_violation_fraction():
    spec = DynamicsSpec(Variant.TRISHE, 3.0, 1.0)
    tr = integrate_second_order(spec, F2(), S1, State(1.0, [3.0, -2.0]), IntegratorConfig(t_end=1e4))
    _, rep = monitor(tr, F2(), S1, spec)
    assert rep.t1 == pytest.approx(9.0)
    assert rep["differential"].violation_fraction < 0.01


@pytest.mark.parametrize("variant,r", [("trish", 1.0), ("trishe", 1.5)])
def test_monitor_report_structure(variant, r):
    spec = DynamicsSpec(Variant(variant), 3.0, 1.0)
    sched = PowerSchedule(r)
    tr = integrate_second_order(spec, F2(), sched, State(1.0, [3.0, -2.0]), IntegratorConfig(t_end=1e4))
    recs, rep = monitor(tr, F2(), sched, spec)
    for name in ("differential", "integrated", "gradient_integral", "fgap_bound", "dist_bound"):
        assert rep[name].violations == 0, name
    lg = np.array([q.log_gamma for q in recs])
    assert np.all(np.diff(lg) > 0)
    assert all(math.isfinite(q.E_p) and math.isfinite(q.G) for q in recs)
    assert all(q.E_p >= q.gap >= 0.5 * q.eps * q.dist_xeps ** 2 - 1e-15 for q in recs)
    doc = json.loads(rep.to_json())
    assert set(doc["differential"]) == {"checked", "violations", "max_violation", "slack"}
    assert "E_p" in tr.columns and "vp_norm" in tr.columns


def test_gamma_overflow_safe():
    spec = DynamicsSpec(Variant.TRISH, 3.0, 1.0)
    tr = integrate_second_order(spec, F2(), S1, State(1.0, [3.0, -2.0]),
                                IntegratorConfig(t_end=1e6, per_decade=20))
    recs, rep = monitor(tr, F2(), S1, spec)
    assert recs[-1].log_gamma > 709 and recs[-1].gamma == math.inf
    assert rep["integrated"].violations == 0


def test_monitor_needs_min_norm_solution():
    obj = Objective(2, lambda x: 0.5 * float(x @ x), lambda x: x.copy())
    spec = DynamicsSpec(Variant.TRISH)
    tr = integrate_second_order(spec, obj, S1, State(1.0, [1.0, 0.0]), IntegratorConfig(t_end=20.0))
    with pytest.raises(MissingMinNormSolution):
        monitor(tr, obj, S1, spec)

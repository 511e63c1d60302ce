import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trishlab import (F1, F2, ConstantSchedule, CustomSchedule, PowerSchedule, Quadratic,
                      ScheduleUnderflow, ViscosityTracker, grad_phi, phi, schedule_from_config,
                      viscosity_point)
from trishlab.tikhonov import (envelope_derivative_identity_check, residual_tolerance,
                               viscosity_curve_derivative_bound)

B = np.array([1.0, 0.0])


def test_power_schedule():
    s = PowerSchedule(1.5)
    assert s.eps(4.0) == pytest.approx(4.0 ** -1.5)
    assert s.eps_dot(4.0) == pytest.approx(-1.5 * 4.0 ** -2.5)
    assert s.eps_dot_over_sqrt_eps(4.0) == pytest.approx(s.eps_dot(4.0) / math.sqrt(s.eps(4.0)))
    assert s.eps(1e6) < s.eps(s.t_min)
    with pytest.raises(ScheduleUnderflow):
        s.eps(0.0)
    for bad in (0.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            PowerSchedule(bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(1e-3, 1e6))
def test_power_schedule_nonincreasing(r, t):
    assert PowerSchedule(r).eps_dot(t) <= 0.0


def test_schedule_config():
    assert schedule_from_config({"kind": "power", "r": 1.0}) == PowerSchedule(1.0)
    assert schedule_from_config({"kind": "constant", "value": 0.5}).eps(3.0) == 0.5
    assert PowerSchedule(1.25).to_config() == {"kind": "power", "r": 1.25}
    with pytest.raises(ValueError):
        schedule_from_config({"kind": "exponential"})


def test_phi_examples():
    assert phi(F2(), PowerSchedule(2.0), 1.0, [0.0, 0.0]) == 0.5
    assert phi(Quadratic(np.eye(2)), PowerSchedule(1.0), 2.0, [2.0, 0.0]) == pytest.approx(3.0)
    assert phi(F1(), ConstantSchedule(0.0), 5.0, [0.3, 0.2]) == F1().value([0.3, 0.2])


def test_grad_phi_examples():
    s = PowerSchedule(1.0)
    xe = viscosity_point(F2(), s.eps(4.0))
    assert xe.residual <= 1e-10
    assert np.allclose(xe.x_eps, np.full(2, 1 / 2.25))
    assert np.allclose(grad_phi(F2(), s, 4.0, xe.x_eps), 0.0, atol=1e-10)
    assert np.allclose(grad_phi(Quadratic(np.eye(2)), s, 7.0, [0.0, 0.0]), 0.0)
    assert np.allclose(grad_phi(F2(), PowerSchedule(2.0), 1.0, [1.0, 1.0]), [2.0, 2.0])


def test_viscosity_point_examples():
    assert np.allclose(viscosity_point(F2(), 0.5).x_eps, [0.4, 0.4], atol=1e-12)
    assert np.allclose(viscosity_point(Quadratic(np.eye(2), B), 1.0).x_eps, [0.5, 0.0], atol=1e-12)
    assert np.allclose(viscosity_point(Quadratic(np.eye(2)), 0.3).x_eps, 0.0)
    with pytest.raises(ValueError):
        viscosity_point(F2(), 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.sampled_from([1.0, 1e-2, 1e-4]), st.integers(0, 10_000))
def test_viscosity_point_random_pd_quadratics(n, eps, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    A = M @ M.T + 0.5 * np.eye(n)
    b = rng.standard_normal(n)
    res = viscosity_point(Quadratic(A, b), eps)
    assert np.allclose(res.x_eps, np.linalg.solve(A + eps * np.eye(n), b), atol=1e-10, rtol=0)
    assert res.residual <= residual_tolerance(eps, res.x_eps)


def test_f1_viscosity_point_residual():
    for eps in (1.0, 1e-3, 1e-6):
        res = viscosity_point(F1(), eps)
        g = F1().gradient(res.x_eps) + eps * res.x_eps
        assert np.linalg.norm(g) <= residual_tolerance(eps, res.x_eps)


def test_tikhonov_path_properties():
    for obj in (F2(), Quadratic(np.diag([1.0, 0.0]), B), F1()):
        xs = obj.min_norm_solution
        d = []
        for eps in np.logspace(0, -6, 25):
            xe = viscosity_point(obj, eps).x_eps
            assert np.linalg.norm(xe) <= np.linalg.norm(xs) + 1e-10
            d.append(np.linalg.norm(xe - xs))
        assert np.all(np.diff(d) <= 1e-12)
    f2 = F2()
    assert np.linalg.norm(viscosity_point(f2, 1e-6).x_eps - f2.min_norm_solution) <= 1e-3


def test_tracker_matches_cold_solves():
    tr = ViscosityTracker(F1())
    for eps in np.logspace(0, -5, 12):
        assert np.allclose(tr(eps).x_eps, viscosity_point(F1(), eps).x_eps, atol=1e-10)


def test_derivative_bound_examples():
    q = Quadratic(np.eye(2), B)
    assert viscosity_curve_derivative_bound(q, PowerSchedule(1.0), 2.0) == pytest.approx(1 / 3)
    assert viscosity_curve_derivative_bound(Quadratic(np.eye(2)), PowerSchedule(1.0), 2.0) == 0.0
    assert viscosity_curve_derivative_bound(F2(), PowerSchedule(1.0), 4.0) == pytest.approx(
        0.25 * math.sqrt(2) / 2.25)


def test_derivative_bound_dominates_finite_difference():
    q = Quadratic(np.diag([1.0, 3.0]), np.array([1.0, -2.0]))
    s = PowerSchedule(1.3)
    for t in (1.5, 4.0, 30.0):
        dt = 1e-4 * t
        fd = np.linalg.norm(viscosity_point(q, s.eps(t + dt)).x_eps
                            - viscosity_point(q, s.eps(t - dt)).x_eps) / (2 * dt)
        assert fd <= viscosity_curve_derivative_bound(q, s, t) + 1e-4


def test_envelope_identity():
    lhs, rhs = envelope_derivative_identity_check(Quadratic(np.eye(2), B), PowerSchedule(1.0), 4.0, 1e-4)
    assert abs(lhs - rhs) <= 1e-6
    lhs, rhs = envelope_derivative_identity_check(F2(), ConstantSchedule(0.3), 4.0, 1e-3)
    assert rhs == 0.0 and abs(lhs) <= 1e-12
    lhs, rhs = envelope_derivative_identity_check(F2(), PowerSchedule(1.5), 10.0, 1e-3)
    assert abs(lhs - rhs) <= 1e-5 * abs(rhs)


def test_custom_schedule():
    s = CustomSchedule(lambda t: 1.0 / (1.0 + t), lambda t: -1.0 / (1.0 + t) ** 2, t_min=0.0)
    assert s.eps(1.0) == 0.5 and s.eps_dot(1.0) == -0.25
    assert s.kernel_args() is None
    with pytest.raises(ScheduleUnderflow):
        s.eps(-1.0)

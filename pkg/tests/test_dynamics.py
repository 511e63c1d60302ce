import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trishlab import (F1, F2, BetaZero, ConstantSchedule, DynamicsSpec, PowerSchedule, Quadratic,
                      ScheduleUnderflow, State, Variant, WrongScheduleKind, acceleration,
                      first_order_rhs, lift_to_first_order, parse_variant,
                      trishe_expanded_coefficients, viscosity_point)
from trishlab.dynamics import pack_kernel_params, velocity_from_first_order
from trishlab import kernels

S1 = PowerSchedule(1.0)
finite = st.floats(-3.0, 3.0, allow_nan=False)


def test_variant_forcing():
    assert DynamicsSpec(Variant.TRISH, p=0.7).p == 0.0
    assert DynamicsSpec(Variant.TRISHE, p=0.2).p == 1.0
    trigs = DynamicsSpec(Variant.TRIGS, beta=5.0)
    assert trigs.beta == 0.0 and not trigs.uses_hessian
    for bad in (dict(delta=0.0), dict(beta=-1.0), dict(variant=Variant.GENERAL_P, p=1.5)):
        with pytest.raises(ValueError):
            DynamicsSpec(**bad)


def test_parse_variant():
    assert parse_variant("TRISHE").p == 1.0
    g = parse_variant("general:0.25", 2.5, 0.5)
    assert (g.variant, g.p, g.delta, g.beta, g.name) == (Variant.GENERAL_P, 0.25, 2.5, 0.5, "general:0.25")
    for bad in ("foo", "general", "general:x", "general:2"):
        with pytest.raises(ValueError):
            parse_variant(bad)


def test_theorem_flags():
    assert DynamicsSpec(Variant.TRISH, delta=1.5).theorem_flags()["delta_gt_2_for_trish"] is False
    assert DynamicsSpec(Variant.TRISHE, delta=0.5).theorem_flags()["delta_gt_2sqrt(1-p)"] is True


def test_acceleration_example():
    spec = DynamicsSpec(Variant.TRISH, 3.0, 1.0)
    a = acceleration(spec, F2(), S1, State(4.0, [1.0, 1.0], [1.0, 0.0]))
    assert np.allclose(a, [-3.75, -2.25])


@pytest.mark.parametrize("variant", [Variant.TRIGS, Variant.TRISH])
def test_acceleration_vanishes_at_viscosity_point(variant):
    spec = DynamicsSpec(variant, 3.0, 1.0)
    for obj in (F1(), F2()):
        xe = viscosity_point(obj, S1.eps(9.0)).x_eps
        assert np.allclose(acceleration(spec, obj, S1, State(9.0, xe)), 0.0, atol=1e-10)


class NoHessF2(type(F2())):
    def hess_vec(self, x, v):
        raise AssertionError("TRIGS must not evaluate the Hessian")


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite, finite, st.floats(1.0, 50.0))
def test_trigs_equals_trish_with_zero_beta(a, b, c, d, t):
    st_ = State(t, [a, b], [c, d])
    trigs = acceleration(DynamicsSpec(Variant.TRIGS, 3.0), NoHessF2(), S1, st_)
    trish = acceleration(DynamicsSpec(Variant.GENERAL_P, 3.0, 0.0, 0.0), F2(), S1, st_)
    assert np.array_equal(trigs, trish)


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite, finite, st.floats(1.0, 100.0), st.floats(0.1, 2.0))
def test_trish_matches_literal_form(a, b, c, d, t, r):
    s = PowerSchedule(r)
    x, v = np.array([a, b]), np.array([c, d])
    e = s.eps(t)
    literal = -3.0 * np.sqrt(e) * v - 1.0 * F2().hess_vec(x, v) - F2().gradient(x) - e * x
    got = acceleration(DynamicsSpec(Variant.TRISH, 3.0, 1.0), F2(), s, State(t, x, v))
    assert np.allclose(got, literal, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite, finite, st.floats(1.0, 100.0), st.floats(0.1, 2.0), st.floats(0.0, 3.0))
def test_trishe_matches_expanded_coefficients(a, b, c, d, t, r, beta):
    s = PowerSchedule(r)
    x, v = np.array([a, b]), np.array([c, d])
    visc, state = trishe_expanded_coefficients(s, t, 3.0, beta)
    expanded = -visc * v - beta * F2().hess_vec(x, v) - F2().gradient(x) - state * x
    got = acceleration(DynamicsSpec(Variant.TRISHE, 3.0, beta), F2(), s, State(t, x, v))
    assert np.allclose(got, expanded, atol=1e-12)


def test_expanded_coefficient_examples():
    assert np.allclose(trishe_expanded_coefficients(S1, 4.0, 3.0, 1.0), (1.75, 0.1875))
    assert np.allclose(trishe_expanded_coefficients(PowerSchedule(2.0), 10.0, 3.0, 1.0), (0.31, 0.008))
    assert np.allclose(trishe_expanded_coefficients(S1, 4.0, 3.0, 0.0), (1.5, 0.25))
    with pytest.raises(WrongScheduleKind):
        trishe_expanded_coefficients(ConstantSchedule(1.0), 4.0, 3.0, 1.0)


def test_first_order_rhs_examples():
    spec = DynamicsSpec(Variant.TRISHE, 3.0, 1.0)
    xd, yd = first_order_rhs(spec, Quadratic(np.eye(2)), S1, 4.0, [0.0, 0.0], [0.0, 0.0])
    assert np.allclose(xd, 0.0) and np.allclose(yd, 0.0)
    xd, yd = first_order_rhs(spec, F2(), S1, 4.0, [1.0, 1.0], [0.0, 0.0])
    # grad phi_4(1,1) = (1,1) + 0.25 (1,1)
    assert np.allclose(xd, [-1.75, -1.75])
    assert np.allclose(yd, [-0.3125, -0.3125])


def test_lift_examples():
    spec = DynamicsSpec(Variant.TRISHE, 3.0, 1.0)
    x0, y0 = lift_to_first_order(spec, Quadratic(np.eye(2)), S1, State(2.0, [0.0, 0.0]))
    assert np.allclose(y0, 0.0)
    _, y0 = lift_to_first_order(spec, F2(), S1, State(4.0, [1.0, 1.0], [-1.75, -1.75]))
    assert np.allclose(y0, 0.0, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(finite, finite, finite, finite, st.floats(1.0, 50.0), st.floats(0.2, 3.0))
def test_lift_round_trip(a, b, c, d, t, beta):
    spec = DynamicsSpec(Variant.TRISHE, 3.0, beta)
    st_ = State(t, [a, b], [c, d])
    x0, y0 = lift_to_first_order(spec, F2(), S1, st_)
    assert np.allclose(velocity_from_first_order(spec, F2(), S1, t, x0, y0), st_.v, atol=1e-12)


def test_first_order_errors():
    with pytest.raises(BetaZero):
        first_order_rhs(DynamicsSpec(Variant.TRISHE, 3.0, 0.0), F2(), S1, 2.0, [0, 0], [0, 0])
    with pytest.raises(ScheduleUnderflow):
        first_order_rhs(DynamicsSpec(Variant.TRISHE), F2(), S1, 0.0, [0, 0], [0, 0])
    with pytest.raises(ScheduleUnderflow):
        acceleration(DynamicsSpec(), F2(), S1, State(-1.0, [0, 0]))


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.9, 3), st.floats(-0.9, 3), finite, finite, st.floats(1.0, 100.0),
       st.sampled_from(["trigs", "trish", "trishe", "general:0.4"]))
def test_compiled_rhs_matches_python(a, b, c, d, t, variant):
    spec = parse_variant(variant)
    s = PowerSchedule(1.5)
    for obj in (F1(), F2(), Quadratic(np.diag([2.0, 1.0]), np.array([1.0, 1.0]))):
        fp, A, bb = pack_kernel_params(spec, obj, s)
        z = np.array([a, b, c, d])
        got = kernels.rhs_second_order(t, z, fp, A, bb)
        ref = acceleration(spec, obj, s, State(t, z[:2], z[2:]))
        assert np.allclose(got[2:], ref, rtol=1e-12, atol=1e-12)
        if spec.p == 1.0:
            xd, yd = first_order_rhs(spec, obj, s, t, z[:2], z[2:])
            got = kernels.rhs_first_order(t, z, fp, A, bb)
            assert np.allclose(got, np.concatenate([xd, yd]), rtol=1e-12, atol=1e-12)


def test_compiled_rhs_flags_domain_exit():
    spec = parse_variant("trish")
    fp, A, b = pack_kernel_params(spec, F1(), S1)
    assert np.all(np.isnan(kernels.rhs_second_order(2.0, np.array([-1.5, 0.0, 0.0, 0.0]), fp, A, b)))

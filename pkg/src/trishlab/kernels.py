"""Hot numeric kernels.

Everything here is written against plain numpy and scalar floats so it runs
unchanged with or without numba (see :mod:`trishlab._accel`). Builtin
objectives and schedules are encoded as integer kinds plus a packed float
parameter vector so the whole time-stepping loop can be compiled.

Packed parameter vector ``fp`` layout::

    fp[0] objective kind     fp[1] schedule kind    fp[2] schedule parameter
    fp[3] delta              fp[4] beta             fp[5] p
    fp[6] 1.0 if the Hessian term is active else 0.0
    fp[7] 1.0 if the eps(t) x restoring term is active else 0.0
"""
import math

import numpy as np

from ._accel import jit

OBJ_F1 = 0
OBJ_F2 = 1
OBJ_QUAD = 2

SCHED_POWER = 0
SCHED_CONST = 1

STATUS_REACHED = 0
STATUS_MAX_STEPS = 1
STATUS_DOMAIN_EXIT = 2
STATUS_UNDERFLOW = 3


# --------------------------------------------------------------------------
# objectives
# --------------------------------------------------------------------------
@jit
def _matvec(A, x):
    n = x.shape[0]
    out = np.zeros(n)
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        out[i] = s
    return out


@jit
def obj_in_domain(kind, x):
    if kind == OBJ_F1:
        return x[0] > -1.0 and x[1] > -1.0
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


@jit
def obj_value(kind, A, b, x):
    if kind == OBJ_F1:
        return x[0] + x[1] * x[1] - 2.0 * math.log(x[0] + 1.0) - 2.0 * math.log(x[1] + 1.0)
    if kind == OBJ_F2:
        s = x[0] + x[1] - 1.0
        return 0.5 * s * s
    Ax = _matvec(A, x)
    val = 0.0
    for i in range(x.shape[0]):
        val += 0.5 * x[i] * Ax[i] - b[i] * x[i]
    return val


@jit
def obj_grad(kind, A, b, x):
    if kind == OBJ_F1:
        g = np.empty(2)
        g[0] = 1.0 - 2.0 / (x[0] + 1.0)
        g[1] = 2.0 * x[1] - 2.0 / (x[1] + 1.0)
        return g
    if kind == OBJ_F2:
        s = x[0] + x[1] - 1.0
        g = np.empty(2)
        g[0] = s
        g[1] = s
        return g
    return _matvec(A, x) - b


@jit
def obj_hess_vec(kind, A, b, x, v):
    if kind == OBJ_F1:
        out = np.empty(2)
        out[0] = 2.0 / ((x[0] + 1.0) ** 2) * v[0]
        out[1] = (2.0 + 2.0 / ((x[1] + 1.0) ** 2)) * v[1]
        return out
    if kind == OBJ_F2:
        s = v[0] + v[1]
        out = np.empty(2)
        out[0] = s
        out[1] = s
        return out
    return _matvec(A, v)


# --------------------------------------------------------------------------
# schedules
# --------------------------------------------------------------------------
@jit
def sched_eval(kind, param, t):
    """Return ``(eps, eps_dot, sqrt(eps), eps_dot / sqrt(eps))``."""
    if kind == SCHED_POWER:
        r = param
        eps = t ** (-r)
        return eps, -r * t ** (-r - 1.0), t ** (-0.5 * r), -r * t ** (-0.5 * r - 1.0)
    return param, 0.0, math.sqrt(param), 0.0


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------
@jit
def rhs_second_order(t, z, fp, A, b):
    """z = (x, v) -> (v, a) for the unified p-family."""
    n = z.shape[0] // 2
    x = z[:n]
    v = z[n:]
    kind = int(fp[0])
    out = np.empty(2 * n)
    if not obj_in_domain(kind, x):
        out[:] = np.nan
        return out
    eps, eps_dot, sq, _ = sched_eval(int(fp[1]), fp[2], t)
    delta = fp[3]
    beta = fp[4]
    p = fp[5]
    g = obj_grad(kind, A, b, x)
    acc = -delta * sq * v - g
    if fp[7] != 0.0:
        acc = acc - eps * x
    if fp[6] != 0.0:
        hv = obj_hess_vec(kind, A, b, x, v)
        acc = acc - beta * (hv + p * (eps_dot * x + eps * v))
    out[:n] = v
    out[n:] = acc
    return out


@jit
def rhs_first_order(t, z, fp, A, b):
    """z = (x, y) for the first-order reformulation of the p = 1 system."""
    n = z.shape[0] // 2
    x = z[:n]
    y = z[n:]
    kind = int(fp[0])
    out = np.empty(2 * n)
    if not obj_in_domain(kind, x):
        out[:] = np.nan
        return out
    eps, _, sq, ratio = sched_eval(int(fp[1]), fp[2], t)
    delta = fp[3]
    beta = fp[4]
    g = obj_grad(kind, A, b, x) + eps * x
    c1 = 1.0 / beta - delta * sq
    c2 = c1 - 0.5 * beta * delta * ratio
    out[:n] = -beta * g + c1 * x - y / beta
    out[n:] = c2 * x - y / beta
    return out


@jit
def _all_finite(z):
    for i in range(z.shape[0]):
        if not math.isfinite(z[i]):
            return False
    return True


# --------------------------------------------------------------------------
# integrators
# --------------------------------------------------------------------------
@jit
def rk4_loop(rhs, t0, z0, t_end, rec_t, h, max_steps, fp, A, b):
    """Classical RK4 with step ``h``, shortened to land on each record time."""
    m = z0.shape[0]
    ts = np.empty(rec_t.shape[0] + 1)
    zs = np.empty((rec_t.shape[0] + 1, m))
    ts[0] = t0
    zs[0] = z0
    n_rec = 1
    t = t0
    z = z0.copy()
    k = 0
    steps = 0
    status = STATUS_REACHED
    while k < rec_t.shape[0]:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        target = rec_t[k]
        hit = t + h >= target - 1e-12 * abs(target)
        hs = target - t if hit else h
        k1 = rhs(t, z, fp, A, b)
        k2 = rhs(t + 0.5 * hs, z + 0.5 * hs * k1, fp, A, b)
        k3 = rhs(t + 0.5 * hs, z + 0.5 * hs * k2, fp, A, b)
        k4 = rhs(t + hs, z + hs * k3, fp, A, b)
        z_new = z + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        steps += 1
        if not (_all_finite(z_new) and _all_finite(k4)):
            status = STATUS_DOMAIN_EXIT
            break
        z = z_new
        if hit:
            t = target
            ts[n_rec] = t
            zs[n_rec] = z
            n_rec += 1
            k += 1
        else:
            t = t + hs
    return ts, zs, n_rec, status, steps, 0


@jit
def rk45_loop(rhs, t0, z0, t_end, rec_t, h0, atol, rtol, max_steps, fp, A, b):
    """Dormand-Prince 5(4) with scaled max-norm error control (FSAL)."""
    m = z0.shape[0]
    ts = np.empty(rec_t.shape[0] + 1)
    zs = np.empty((rec_t.shape[0] + 1, m))
    ts[0] = t0
    zs[0] = z0
    n_rec = 1
    t = t0
    z = z0.copy()
    h = h0
    k = 0
    steps = 0
    rejected = 0
    status = STATUS_REACHED
    last_nonfinite = False
    k1 = rhs(t, z, fp, A, b)
    if not _all_finite(k1):
        return ts, zs, n_rec, STATUS_DOMAIN_EXIT, steps, rejected
    while k < rec_t.shape[0]:
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 1e-14 * max(abs(t), 1.0):
            status = STATUS_DOMAIN_EXIT if last_nonfinite else STATUS_UNDERFLOW
            break
        target = rec_t[k]
        hit = t + h >= target - 1e-12 * abs(target)
        hs = target - t if hit else h
        k2 = rhs(t + hs / 5.0, z + hs * (k1 / 5.0), fp, A, b)
        k3 = rhs(t + 0.3 * hs, z + hs * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2), fp, A, b)
        k4 = rhs(t + 0.8 * hs, z + hs * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3), fp, A, b)
        k5 = rhs(t + 8.0 / 9.0 * hs,
                 z + hs * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2
                           + 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4), fp, A, b)
        k6 = rhs(t + hs,
                 z + hs * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3
                           + 49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5), fp, A, b)
        z_new = z + hs * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                          - 2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6)
        k7 = rhs(t + hs, z_new, fp, A, b)
        steps += 1
        if not (_all_finite(z_new) and _all_finite(k7)):
            last_nonfinite = True
            rejected += 1
            h = 0.25 * hs
            continue
        last_nonfinite = False
        e = hs * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
                  - 17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7)
        err = 0.0
        for i in range(m):
            sc = atol + rtol * max(abs(z[i]), abs(z_new[i]))
            r = abs(e[i]) / sc
            if r > err:
                err = r
        if err <= 1.0:
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            z = z_new
            k1 = k7
            if hit:
                t = target
                ts[n_rec] = t
                zs[n_rec] = z
                n_rec += 1
                k += 1
            else:
                t = t + hs
                h = hs * fac
        else:
            rejected += 1
            h = hs * max(0.2, 0.9 * err ** -0.2)
    return ts, zs, n_rec, status, steps, rejected

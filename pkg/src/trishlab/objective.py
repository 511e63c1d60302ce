"""Smooth convex objectives with exact derivatives.

The builtins (``f1``, ``f2``, quadratics) carry an integer kernel kind so the
integrators can run them through the compiled loop; a generic
:class:`Objective` built from Python callables works everywhere else.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DomainViolation

_SQRT_EPS = np.sqrt(np.finfo(float).eps)


class Objective:
    """A convex C^2 function on (a subset of) R^dim.

    Subclasses or callers supply ``value`` and ``gradient``; ``hess_vec``
    falls back to a central difference of the gradient when no analytic
    Hessian-vector product is given.
    """

    kernel_kind: Optional[int] = None
    name = "custom"

    def __init__(
        self,
        dim: int,
        value: Callable[[np.ndarray], float],
        gradient: Callable[[np.ndarray], np.ndarray],
        hess_vec: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
        domain_contains: Optional[Callable[[np.ndarray], bool]] = None,
        min_value: Optional[float] = None,
        min_norm_solution=None,
        strong_convexity_modulus: Optional[float] = None,
        name: str = "custom",
    ):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self._value = value
        self._gradient = gradient
        self._hess_vec = hess_vec
        self._domain = domain_contains
        self.min_value = min_value
        self.min_norm_solution = (
            None if min_norm_solution is None else np.asarray(min_norm_solution, dtype=float)
        )
        self.strong_convexity_modulus = strong_convexity_modulus
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, dim={self.dim})"

    @property
    def has_analytic_hessian(self) -> bool:
        return self._hess_vec is not None

    def domain_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        return True if self._domain is None else bool(self._domain(x))

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.domain_contains(x):
            raise DomainViolation(f"{self.name}: point {x} outside the domain")
        return x

    def value(self, x) -> float:
        return float(self._value(self._check(x)))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self._gradient(self._check(x)), dtype=float)

    def hess_vec(self, x, v) -> np.ndarray:
        x = self._check(x)
        v = np.asarray(v, dtype=float)
        if self._hess_vec is not None:
            return np.asarray(self._hess_vec(x, v), dtype=float)
        return fd_hess_vec(self, x, v)

    # short aliases
    eval = value
    grad = gradient


def fd_hess_vec(obj: Objective, x, v) -> np.ndarray:
    """Central difference of the gradient along ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vn = np.linalg.norm(v)
    if vn == 0.0:
        return np.zeros_like(x)
    h = _SQRT_EPS * (1.0 + np.linalg.norm(x)) / max(vn, 1e-30)
    return (obj.gradient(x + h * v) - obj.gradient(x - h * v)) / (2.0 * h)


class _KernelObjective(Objective):
    """Builtin objective evaluated through :mod:`trishlab.kernels`."""

    def __init__(self, kind, dim, A=None, b=None, **kw):
        self.kernel_kind = kind
        self.A = np.zeros((1, 1)) if A is None else np.ascontiguousarray(A, dtype=float)
        self.b = np.zeros(1) if b is None else np.ascontiguousarray(b, dtype=float)
        super().__init__(
            dim,
            value=lambda x: kernels.obj_value(kind, self.A, self.b, x),
            gradient=lambda x: kernels.obj_grad(kind, self.A, self.b, x),
            hess_vec=lambda x, v: kernels.obj_hess_vec(kind, self.A, self.b, x, v),
            **kw,
        )

    def domain_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        return bool(kernels.obj_in_domain(self.kernel_kind, x))

    def kernel_args(self):
        return self.kernel_kind, self.A, self.b


class F1(_KernelObjective):
    """(x1 + x2^2) - 2 log((x1+1)(x2+1)) on the open box (-1, inf)^2.

    Strictly convex with unique minimizer (1, (sqrt(5)-1)/2).
    """

    def __init__(self):
        xs = np.array([1.0, (np.sqrt(5.0) - 1.0) / 2.0])
        super().__init__(kernels.OBJ_F1, 2, name="f1", min_norm_solution=xs)
        self.min_value = self.value(xs)


class F2(_KernelObjective):
    """0.5 (x1 + x2 - 1)^2; minimizers form a line, min-norm one is (1/2, 1/2)."""

    def __init__(self):
        super().__init__(
            kernels.OBJ_F2, 2, name="f2", min_value=0.0, min_norm_solution=np.array([0.5, 0.5])
        )


class Quadratic(_KernelObjective):
    """0.5 x^T A x - b^T x with A symmetric positive semidefinite.

    ``b`` must lie in the range of ``A`` (otherwise the function is unbounded
    below). The minimum-norm minimizer is the pseudo-inverse solve, computed
    only for ``dim <= 32``.
    """

    MAX_DENSE_DIM = 32

    def __init__(self, A, b=None, name="quadratic"):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if not np.allclose(A, A.T, atol=1e-12 * (1.0 + np.abs(A).max())):
            raise ValueError("A must be symmetric")
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        if b.shape != (n,):
            raise ValueError("b must have shape (dim,)")
        xs = min_val = mu = None
        if n <= self.MAX_DENSE_DIM:
            w = np.linalg.eigvalsh(A)
            scale = max(1.0, abs(w).max())
            if w.min() < -1e-10 * scale:
                raise ValueError("A must be positive semidefinite")
            xs = min_norm_solve(A, b)
            if np.linalg.norm(A @ xs - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
                raise ValueError("b is not in the range of A; objective unbounded below")
            min_val = float(-0.5 * b @ xs)
            mu = max(float(w.min()), 0.0)
        super().__init__(
            kernels.OBJ_QUAD, n, A=A, b=b, name=name,
            min_value=min_val, min_norm_solution=xs, strong_convexity_modulus=mu,
        )


class StronglyConvexQuadratic(Quadratic):
    def __init__(self, A, b=None, name="quadratic"):
        super().__init__(A, b, name=name)
        if not self.strong_convexity_modulus or self.strong_convexity_modulus <= 0.0:
            raise ValueError("A must be positive definite")


def min_norm_solve(A, b) -> np.ndarray:
    """Least-squares minimum-norm solution of A x = b (dense pseudo-inverse)."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] > Quadratic.MAX_DENSE_DIM:
        raise ValueError("dense pseudo-inverse restricted to dim <= 32")
    return np.linalg.pinv(A, rcond=1e-12) @ np.asarray(b, dtype=float)


def get_objective(name: str, **params) -> Objective:
    """Resolve a builtin objective by string id: ``f1``, ``f2``, ``quadratic``."""
    key = name.strip().lower()
    if key == "f1":
        return F1()
    if key == "f2":
        return F2()
    if key == "quadratic":
        A = params.get("A")
        if A is None:
            raise ValueError("quadratic objective needs a matrix 'A'")
        return Quadratic(A, params.get("b"))
    raise ValueError(f"unknown objective {name!r} (expected f1, f2 or quadratic)")

"""Barrier-quadratic cost functions and their Legendre conjugates.

Each controllable unit carries a cost

    J(u) = 0.5 q (u - u_star)^2 - gamma [log(upper - u) + log(u - lower)]

on the open interval (lower, upper). For ``gamma > 0`` the gradient maps the
interval onto the whole real line, so the conjugate gradient (the inverse of
the gradient) is defined everywhere and always lands strictly inside the
limits. Pure quadratics (``gamma == 0``, unbounded) use closed forms.

The conjugate is the usual sup-form ``J*(eta) = sup_u [eta u - J(u)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConvergenceFailure, DomainViolation

CONJ_TOL = 1e-12
CONJ_MAXITER = 200
_BRACKET_EPS = 1e-14
_ULP = 2.220446049250313e-16


@njit(cache=True)
def _grad(q, us, g, lo, hi, u):
    r = q * (u - us)
    if g > 0.0:
        r += g / (hi - u) - g / (u - lo)
    return r


@njit(cache=True)
def _hess(q, g, lo, hi, u):
    h = q
    if g > 0.0:
        h += g / (hi - u) ** 2 + g / (u - lo) ** 2
    return h


@njit(cache=True)
def _conj_grad_scalar(q, us, g, lo, hi, eta, tol, maxiter):
    """Return (u, ok) with grad(u) = eta. ok is False only on iteration overrun."""
    if not math.isfinite(eta):
        return math.nan, True
    if g == 0.0:
        # unbounded pure quadratic
        return us + eta / q, True

    eps = _BRACKET_EPS * (hi - lo)
    # a narrow interval far from zero can make lo + eps round back onto lo
    while lo + eps <= lo or hi - eps >= hi:
        eps *= 2.0
    a = lo + eps
    b = hi - eps
    e0 = eps
    # Widen toward the limits when eta is extreme; the gradient diverges there.
    while _grad(q, us, g, lo, hi, a) > eta:
        eps *= 0.5
        a_new = lo + eps
        if a_new <= lo or a_new == a:
            return a, True
        a = a_new
    eps = e0
    while _grad(q, us, g, lo, hi, b) < eta:
        eps *= 0.5
        b_new = hi - eps
        if b_new >= hi or b_new == b:
            return b, True
        b = b_new

    x = us + eta / q
    if not (a < x < b):
        x = 0.5 * (a + b)
    best = x
    best_r = math.inf
    for _ in range(maxiter):
        r = _grad(q, us, g, lo, hi, x) - eta
        if abs(r) < best_r:
            best_r = abs(r)
            best = x
        if abs(r) <= tol:
            return x, True
        if r > 0.0:
            b = x
        else:
            a = x
        # double-precision floor: the bracket cannot shrink any further
        if b - a <= 4.0 * _ULP * max(abs(a), abs(b), 1e-300):
            return best, True
        xn = x - r / _hess(q, g, lo, hi, x)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        x = xn
    return best, False


@njit(cache=True)
def _conj_grad_array(q, us, g, lo, hi, eta, tol, maxiter):
    n = eta.shape[0]
    out = np.empty(n)
    failures = 0
    for k in range(n):
        u, ok = _conj_grad_scalar(q[k], us[k], g[k], lo[k], hi[k], eta[k], tol, maxiter)
        out[k] = u
        if not ok:
            failures += 1
    return out, failures


@dataclass(frozen=True)
class BarrierQuadraticObjective:
    q: float
    u_star: float
    gamma: float = 0.0
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got ({self.lower}, {self.upper})")
        finite = (math.isfinite(self.lower), math.isfinite(self.upper))
        if self.gamma > 0 and not all(finite):
            raise ValueError("gamma > 0 requires both limits finite")
        if self.gamma == 0 and any(finite):
            raise ValueError("finite limits require a barrier (gamma > 0)")

    @property
    def mu(self) -> float:
        """Strong convexity parameter; the barrier only adds curvature."""
        return self.q

    def _check(self, u):
        if not (self.lower < u < self.upper):
            raise DomainViolation(f"u={u} outside ({self.lower}, {self.upper})")

    def value(self, u: float) -> float:
        self._check(u)
        v = 0.5 * self.q * (u - self.u_star) ** 2
        if self.gamma > 0:
            v -= self.gamma * (math.log(self.upper - u) + math.log(u - self.lower))
        return v

    def grad(self, u: float) -> float:
        self._check(u)
        return _grad(self.q, self.u_star, self.gamma, self.lower, self.upper, u)

    def hess(self, u: float) -> float:
        self._check(u)
        return _hess(self.q, self.gamma, self.lower, self.upper, u)

    def conj_grad(self, eta: float) -> float:
        u, ok = _conj_grad_scalar(self.q, self.u_star, self.gamma, self.lower,
                                  self.upper, float(eta), CONJ_TOL, CONJ_MAXITER)
        if not ok:
            raise ConvergenceFailure(f"conjugate gradient did not converge at eta={eta}")
        return u

    def conj_value(self, eta: float) -> float:
        if self.gamma == 0:
            return eta * self.u_star + 0.5 * eta * eta / self.q
        u = self.conj_grad(eta)
        return eta * u - self.value(u)


class ObjectiveBank:
    """An ordered collection of unit objectives with vectorized evaluation.

    Array arguments broadcast against the trailing unit axis, so ``eta`` may
    have shape ``(m,)`` or ``(N, m)``.
    """

    def __init__(self, objectives: Sequence[BarrierQuadraticObjective]):
        objectives = tuple(objectives)
        if not objectives:
            raise ValueError("objective bank must contain at least one objective")
        self.objectives = objectives
        self.q = np.array([f.q for f in objectives])
        self.u_star = np.array([f.u_star for f in objectives])
        self.gamma = np.array([f.gamma for f in objectives])
        self.lower = np.array([f.lower for f in objectives])
        self.upper = np.array([f.upper for f in objectives])
        for arr in (self.q, self.u_star, self.gamma, self.lower, self.upper):
            arr.flags.writeable = False

    def __len__(self):
        return len(self.objectives)

    def __iter__(self):
        return iter(self.objectives)

    def __getitem__(self, i):
        return self.objectives[i]

    def __eq__(self, other):
        return isinstance(other, ObjectiveBank) and self.objectives == other.objectives

    def __repr__(self):
        return f"ObjectiveBank({list(self.objectives)!r})"

    @property
    def mu_min(self) -> float:
        return float(self.q.min())

    def _check(self, u):
        if np.any(u <= self.lower) or np.any(u >= self.upper):
            raise DomainViolation("dispatch outside unit limits")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        self._check(u)
        v = 0.5 * self.q * (u - self.u_star) ** 2
        barrier = self.gamma > 0
        if barrier.any():
            with np.errstate(invalid="ignore", divide="ignore"):
                logs = np.log(self.upper - u) + np.log(u - self.lower)
                v = v - np.where(barrier, self.gamma * logs, 0.0)
        return v

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        self._check(u)
        g = self.q * (u - self.u_star)
        with np.errstate(invalid="ignore", divide="ignore"):
            bar = self.gamma / (self.upper - u) - self.gamma / (u - self.lower)
        return g + np.where(self.gamma > 0, bar, 0.0)

    def conj_grad(self, eta):
        eta = np.asarray(eta, dtype=float)
        if eta.shape == self.q.shape:
            u, failures = _conj_grad_array(self.q, self.u_star, self.gamma, self.lower,
                                           self.upper, eta, CONJ_TOL, CONJ_MAXITER)
        else:
            shape = np.broadcast_shapes(eta.shape, self.q.shape)
            args = [np.ascontiguousarray(np.broadcast_to(a, shape)).ravel()
                    for a in (self.q, self.u_star, self.gamma, self.lower, self.upper, eta)]
            u, failures = _conj_grad_array(*args, CONJ_TOL, CONJ_MAXITER)
            u = u.reshape(shape)
        if failures:
            raise ConvergenceFailure(f"{failures} conjugate gradient solves did not converge")
        return u

    def conj_value(self, eta):
        eta = np.asarray(eta, dtype=float)
        u = self.conj_grad(eta)
        quad = self.gamma == 0
        out = eta * u - 0.5 * self.q * (u - self.u_star) ** 2
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            logs = np.log(self.upper - u) + np.log(u - self.lower)
            out = out + np.where(quad, 0.0, self.gamma * logs)
            # closed form for unbounded quadratics
            return np.where(quad, eta * self.u_star + 0.5 * eta**2 / self.q, out)


def strong_convexity_parameter(bank: ObjectiveBank) -> float:
    return bank.mu_min

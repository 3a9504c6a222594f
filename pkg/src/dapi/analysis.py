"""Dispatch oracle, equilibrium computation and Lyapunov certificates.

``kkt_solve`` only depends on the objective bank, never on controller or
simulation code, so it can serve as ground truth for closed-loop runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import graph as gr
from .controller import CascadeState, cascade_derivative
from .convex import ObjectiveBank
from .errors import GainConditionViolated, Infeasible, NotHurwitz, NullspaceNotOneDimensional
from .plant import beta as plant_beta

KKT_TOL = 1e-11
STABLE = "STABLE_CERTIFIED"
NOT_CERTIFIED = "NOT_CERTIFIED"


@dataclass(frozen=True)
class KktSolution:
    u_bar: np.ndarray
    lambda_bar: float


def kkt_solve(bank: ObjectiveBank, d: float, tol=KKT_TOL, maxiter=400) -> KktSolution:
    """Solve min sum J_i(u_i) s.t. sum u_i = d by bisection on the price."""
    lo_sum, hi_sum = bank.lower.sum(), bank.upper.sum()
    if not (lo_sum < d < hi_sum):
        raise Infeasible(f"load {d} not strictly inside ({lo_sum}, {hi_sum})")

    m = len(bank)

    def residual(lam):
        return bank.conj_grad(np.full(m, lam)).sum() - d

    finite = np.isfinite(bank.lower) & np.isfinite(bank.upper)
    mid = bank.u_star.copy()
    mid[finite] = 0.5 * (bank.lower[finite] + bank.upper[finite])
    bound = 1.0 + float(np.max(np.abs(bank.grad(mid))))
    a, b = -bound, bound
    ra, rb = residual(a), residual(b)
    while ra > 0:
        a *= 2.0
        ra = residual(a)
    while rb < 0:
        b *= 2.0
        rb = residual(b)

    lam, r = (a, ra) if abs(ra) < abs(rb) else (b, rb)
    for _ in range(maxiter):
        if abs(r) <= tol:
            break
        c = 0.5 * (a + b)
        if c <= a or c >= b:
            break
        rc = residual(c)
        if abs(rc) < abs(r):
            lam, r = c, rc
        if rc > 0:
            b = c
        else:
            a = c
    return KktSolution(bank.conj_grad(np.full(m, lam)), float(lam))


def equilibrium_eta(bank: ObjectiveBank, d: float) -> np.ndarray:
    return np.full(len(bank), kkt_solve(bank, d).lambda_bar)


def check_distributed_optimality(u, eta, bank, lap, K, w, beta, d, tol=1e-8) -> bool:
    """Distributed optimality test: K * omega_bar(u) + L eta = 0 and u = grad J*(eta)."""
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    K = np.asarray(K, dtype=float)
    if K.ndim == 1:
        K = np.diag(K)
    if not float(w @ K @ np.ones(len(w))) > 0:
        raise GainConditionViolated("need w^T K 1 > 0")
    omega_bar = np.full(len(u), (u.sum() - d) / beta)
    balance = K @ omega_bar + lap @ eta
    stationarity = u - bank.conj_grad(eta)
    spread = eta.max() - eta.min()
    return bool(np.max(np.abs(balance)) <= tol and np.max(np.abs(stationarity)) <= tol
                and spread <= tol)


def lyapunov_V(bank: ObjectiveBank, z, z_bar):
    """Bregman-type function sum_i [J_i*(z) - J_i*(z_bar) - grad J_i*(z_bar)(z - z_bar)].

    ``z`` may be a scalar or a 1-D array of values.
    """
    z = np.asarray(z, dtype=float)
    zz = z[..., None] * np.ones(len(bank))
    zb = np.full(len(bank), float(z_bar))
    val = bank.conj_value(zz) - bank.conj_value(zb) - bank.conj_grad(zb) * (zz - zb)
    out = val.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def lyapunov_V_grad(bank: ObjectiveBank, z, z_bar) -> float:
    m = len(bank)
    return float(bank.conj_grad(np.full(m, z)).sum() - bank.conj_grad(np.full(m, z_bar)).sum())


def solve_lyapunov_P(A):
    """P > 0 with A^T P + P A = -I; the dissipation rate is then rho = 1."""
    P = gr.solve_lyapunov_kron(A)
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise NotHurwitz("Lyapunov solution is not positive definite") from exc
    return P, 1.0


def spectral_norm(B, rtol=1e-12, maxiter=100_000) -> float:
    """Largest singular value by power iteration on B^T B."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    G = B.T @ B
    n = G.shape[0]
    x = np.linspace(1.0, 2.0, n)
    x /= np.linalg.norm(x)
    lam = float(x @ G @ x)
    for _ in range(maxiter):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = float(x @ G @ x)
        if abs(new - lam) <= rtol * new:
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))


def compute_kappa(bank: ObjectiveBank, lap, basis, beta) -> float:
    m = np.shape(lap)[0]
    if m < 2:
        raise ValueError("kappa needs at least two agents")
    # orthonormal columns: ||V_perp||_2 == 1
    return math.sqrt(m) / (beta * bank.mu_min) + spectral_norm(lap @ basis) / math.sqrt(m)


def alpha_star(beta, kappa, rho) -> float:
    if not rho > 0:
        raise ValueError("rho must be positive")
    return beta * kappa**2 / (4.0 * rho)


def composite_lyapunov(bank, z, z_bar, delta, P, alpha):
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    delta = np.asarray(delta, dtype=float)
    w = np.einsum("...i,ij,...j->...", delta, P, delta)
    return lyapunov_V(bank, z, z_bar) + alpha * w


def composite_derivative(s: CascadeState, bank, lap, basis, beta, d, z_bar, P, alpha) -> float:
    """Time derivative of the composite function along the cascade vector field."""
    ds = cascade_derivative(s, bank, lap, basis, beta, d)
    return lyapunov_V_grad(bank, s.z, z_bar) * ds.z + alpha * 2.0 * float(s.delta @ P @ ds.delta)


@dataclass
class CertificateReport:
    nodes: list
    reachable_nodes: list
    zero_eig_simple: bool
    hurwitz: bool
    kappa: float | None
    rho: float | None
    P: list | None
    alpha_star: float | None
    mu_min: float
    beta: float
    w: list | None
    verdict: str
    checks: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == STABLE

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)


def certify(cfg) -> CertificateReport:
    """Assemble every checkable ingredient of the low-gain stability argument."""
    g, bank = cfg.graph, cfg.bank
    names = list(cfg.node_names)
    lap = gr.build_laplacian(g)
    m = g.node_count
    errors, checks = {}, {}

    reachable = sorted(gr.find_globally_reachable(g))
    checks["has_globally_reachable_node"] = bool(reachable)

    w = None
    try:
        w = gr.left_null_vector(lap)
        checks["w_positive_exactly_on_reachable"] = bool(
            set(np.flatnonzero(w > 0).tolist()) == set(reachable))
    except NullspaceNotOneDimensional as exc:
        errors["w"] = str(exc)
    zero_simple = w is not None

    b = plant_beta(cfg.plant)
    mu = bank.mu_min
    hurwitz, P, rho, kappa, a_star = False, None, None, None, None
    if m >= 2:
        basis = gr.build_complement_basis(m)
        A = -gr.projected_laplacian(lap, basis)
        hurwitz = gr.is_hurwitz(A)
        kappa = compute_kappa(bank, lap, basis, b)
        try:
            P, rho = solve_lyapunov_P(A)
            residual = float(np.max(np.abs(A.T @ P + P @ A + np.eye(m - 1))))
            checks["lyapunov_residual_ok"] = residual <= 1e-10
            a_star = alpha_star(b, kappa, rho)
            alpha = 2.0 * a_star
            M = np.array([[1.0 / b, -kappa / 2.0], [-kappa / 2.0, alpha * rho]])
            checks["composite_matrix_positive_definite"] = bool(np.linalg.det(M) > 0 and M[0, 0] > 0)
        except NotHurwitz as exc:
            errors["P"] = str(exc)
    else:
        # a single agent has no disagreement dynamics
        hurwitz = True
    checks["projected_laplacian_hurwitz"] = hurwitz
    checks["zero_eigenvalue_simple"] = zero_simple
    checks["hurwitz_matches_reachability"] = hurwitz == bool(reachable)

    verdict = STABLE if reachable else NOT_CERTIFIED
    return CertificateReport(
        nodes=names,
        reachable_nodes=[names[i] for i in reachable],
        zero_eig_simple=zero_simple,
        hurwitz=hurwitz,
        kappa=kappa,
        rho=rho,
        P=None if P is None else P.tolist(),
        alpha_star=a_star,
        mu_min=mu,
        beta=b,
        w=None if w is None else w.tolist(),
        verdict=verdict,
        checks=checks,
        errors=errors,
    )

"""DAPI controller, its reduced slow dynamics and the (z, delta) cascade coordinates."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .convex import ObjectiveBank


@dataclass(frozen=True, eq=False)
class DapiController:
    eta: np.ndarray
    tau: float
    laplacian: np.ndarray
    bank: ObjectiveBank

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        eta = np.asarray(self.eta, dtype=float)
        m = len(self.bank)
        if eta.shape != (m,) or np.shape(self.laplacian) != (m, m):
            raise ValueError(f"inconsistent sizes: eta {eta.shape}, L {np.shape(self.laplacian)}, "
                             f"{m} objectives")
        object.__setattr__(self, "eta", eta)

    @property
    def m(self) -> int:
        return len(self.bank)

    def with_eta(self, eta) -> "DapiController":
        return replace(self, eta=eta)


@dataclass(frozen=True)
class CascadeState:
    z: float
    delta: np.ndarray


def dapi_derivative(c: DapiController, freq) -> np.ndarray:
    freq = np.asarray(freq, dtype=float)
    if freq.shape != c.eta.shape:
        raise ValueError(f"frequency vector has shape {freq.shape}, expected {c.eta.shape}")
    return (-freq - c.laplacian @ c.eta) / c.tau


def dapi_derivative_componentwise(c: DapiController, adjacency, freq) -> np.ndarray:
    """Same vector field written agent by agent from the adjacency weights."""
    out = np.empty(c.m)
    for i in range(c.m):
        s = 0.0
        for j in range(c.m):
            s += adjacency[i][j] * (c.eta[i] - c.eta[j])
        out[i] = (-freq[i] - s) / c.tau
    return out


def control_outputs(c: DapiController) -> np.ndarray:
    return c.bank.conj_grad(c.eta)


def reduced_derivative(c: DapiController, beta: float, d: float) -> np.ndarray:
    """Slow-time vector field with the plant replaced by its steady-state map."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    u = c.bank.conj_grad(c.eta)
    return -(u.sum() - d) / beta - c.laplacian @ c.eta


def to_cascade(eta, basis) -> CascadeState:
    eta = np.asarray(eta, dtype=float)
    return CascadeState(float(eta.mean()), basis.T @ eta)


def from_cascade(s: CascadeState, basis) -> np.ndarray:
    return s.z + basis @ s.delta


def cascade_derivative(s: CascadeState, bank: ObjectiveBank, lap, basis, beta, d) -> CascadeState:
    m = lap.shape[0]
    vd = basis @ s.delta
    u = bank.conj_grad(s.z + vd)
    lvd = lap @ vd
    zdot = -u.sum() / beta - lvd.sum() / m + d / beta
    return CascadeState(float(zdot), -(basis.T @ lvd))


def phi(z, z_bar, bank: ObjectiveBank, beta):
    m = len(bank)
    return -(bank.conj_grad(np.full(m, z)).sum() - bank.conj_grad(np.full(m, z_bar)).sum()) / beta


def psi(s: CascadeState, bank: ObjectiveBank, lap, basis, beta):
    """Coupling term of the driven z-dynamics; vanishes when delta = 0."""
    m = lap.shape[0]
    vd = basis @ s.delta
    gap = bank.conj_grad(s.z + vd).sum() - bank.conj_grad(np.full(m, s.z)).sum()
    return -gap / beta - (lap @ vd).sum() / m

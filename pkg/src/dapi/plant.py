"""Linearized network-reduced swing / turbine-governor plant.

Per machine ``i``::

    dtheta_i/dt   = omega_i - omega_1            (angles relative to machine 1)
    M_i domega_i  = -sum_j T_ij (theta_i - theta_j) - D_i omega_i + Pm_i - d_i
    T_i dPm_i     = -Pm_i - omega_i / R_i + u_i

Only controllable machines receive a set-point; ``u`` is indexed over them in
the order given by ``LinearPlant.controllable_index``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularNetwork


@dataclass(frozen=True)
class MachineParams:
    M: float
    D: float
    T_gov: float
    R_droop: float
    controllable: bool = True

    def __post_init__(self):
        for name in ("M", "D", "T_gov", "R_droop"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class PlantState:
    delta_theta: np.ndarray
    delta_omega: np.ndarray
    delta_pm: np.ndarray

    def to_vector(self):
        return np.concatenate([self.delta_theta, self.delta_omega, self.delta_pm])

    @classmethod
    def from_vector(cls, x):
        n = len(x) // 3
        return cls(x[:n].copy(), x[n:2 * n].copy(), x[2 * n:].copy())


@dataclass(frozen=True)
class Disturbance:
    per_machine_load: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.per_machine_load))


def _connected(adj) -> bool:
    n = adj.shape[0]
    seen = {0}
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(adj[k] > 0):
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    return len(seen) == n


class LinearPlant:
    def __init__(self, machines: Sequence[MachineParams], susceptances, control_order=None,
                 check_connected=True):
        self.machines = tuple(machines)
        n = len(self.machines)
        t = np.array(susceptances, dtype=float)
        if t.shape != (n, n):
            raise ValueError(f"susceptance matrix must be {n}x{n}, got {t.shape}")
        if not np.allclose(t, t.T, rtol=0, atol=0) or np.any(t < 0) or np.any(np.diag(t) != 0):
            raise ValueError("susceptances must be symmetric, non-negative, with zero diagonal")
        if check_connected and not _connected(t):
            raise SingularNetwork("network graph induced by the susceptances is disconnected")
        t.flags.writeable = False
        self.susceptances = t
        self.n = n
        self.M = np.array([mc.M for mc in self.machines])
        self.D = np.array([mc.D for mc in self.machines])
        self.T_gov = np.array([mc.T_gov for mc in self.machines])
        self.R = np.array([mc.R_droop for mc in self.machines])
        flagged = [i for i, mc in enumerate(self.machines) if mc.controllable]
        if control_order is None:
            control_order = flagged
        if sorted(control_order) != flagged:
            raise ValueError("control_order must list each controllable machine exactly once")
        self.controllable_index = np.array(control_order, dtype=int)
        # susceptance Laplacian
        self.B = np.diag(t.sum(axis=1)) - t
        self._matrices = None

    @property
    def m(self) -> int:
        return len(self.controllable_index)

    def scatter(self, u):
        """Embed the controllable set-points into a length-n vector."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.m,):
            raise ValueError(f"expected {self.m} set-points, got shape {u.shape}")
        full = np.zeros(self.n)
        full[self.controllable_index] = u
        return full

    def derivative(self, state: PlantState, u, dist: Disturbance) -> PlantState:
        d = np.asarray(dist.per_machine_load, dtype=float)
        if d.shape != (self.n,) or state.delta_omega.shape != (self.n,):
            raise ValueError("state/disturbance dimension mismatch")
        uf = self.scatter(u)
        th, om, pm = state.delta_theta, state.delta_omega, state.delta_pm
        dth = om - om[0]
        dom = (-self.B @ th - self.D * om + pm - d) / self.M
        dpm = (-pm - om / self.R + uf) / self.T_gov
        return PlantState(dth, dom, dpm)

    def matrices(self):
        """(A, B, E) with x' = A x + B u + E d on the stacked state (theta, omega, Pm)."""
        if self._matrices is None:
            n = self.n
            A = np.zeros((3 * n, 3 * n))
            th, om, pm = slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n)
            A[th, om] = np.eye(n)
            A[th, n] -= 1.0
            A[om, th] = -self.B / self.M[:, None]
            A[om, om] = -np.diag(self.D / self.M)
            A[om, pm] = np.diag(1.0 / self.M)
            A[pm, om] = -np.diag(1.0 / (self.R * self.T_gov))
            A[pm, pm] = -np.diag(1.0 / self.T_gov)
            Bu = np.zeros((3 * n, self.m))
            Bu[2 * n + self.controllable_index, np.arange(self.m)] = 1.0 / self.T_gov[self.controllable_index]
            E = np.zeros((3 * n, n))
            E[om, :] = -np.diag(1.0 / self.M)
            for mat in (A, Bu, E):
                mat.flags.writeable = False
            self._matrices = (A, Bu, E)
        return self._matrices

    def steady_state(self, u, dist: Disturbance) -> PlantState:
        uf = self.scatter(u)
        d = np.asarray(dist.per_machine_load, dtype=float)
        omega = (uf.sum() - d.sum()) / beta(self)
        pm = uf - omega / self.R
        rhs = pm - self.D * omega - d
        theta = np.zeros(self.n)
        if self.n > 1:
            reduced = self.B[1:, 1:]
            try:
                theta[1:] = np.linalg.solve(reduced, rhs[1:])
            except np.linalg.LinAlgError as exc:
                raise SingularNetwork("reduced susceptance matrix is singular") from exc
        return PlantState(theta, np.full(self.n, omega), pm)


def beta(plant: LinearPlant) -> float:
    """Aggregate frequency response: sum over every machine of D_i + 1/R_i."""
    return float(np.sum(plant.D + 1.0 / plant.R))


def output_frequencies(state: PlantState, index) -> np.ndarray:
    return np.asarray(state.delta_omega)[np.asarray(index, dtype=int)]


def equilibrium_frequency_map(plant: LinearPlant, u, dist: Disturbance) -> np.ndarray:
    mismatch = float(np.sum(u)) - dist.total
    return np.full(plant.m, mismatch / beta(plant))


def ring_susceptances(n, value):
    t = np.zeros((n, n))
    if n == 2:
        t[0, 1] = t[1, 0] = value
    elif n > 2:
        for i in range(n):
            j = (i + 1) % n
            t[i, j] = t[j, i] = value
    return t

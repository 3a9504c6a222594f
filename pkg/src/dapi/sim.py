"""Fixed-step closed-loop simulation, metrics and trajectory files."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analysis as an
from . import graph as gr
from .config import ScenarioConfig
from .errors import NonFiniteState, NotHurwitz
from .plant import Disturbance, beta as plant_beta

log = logging.getLogger(__name__)

FREQ_TOL = 1e-4
SPREAD_TOL = 1e-6


def rk4_step(f, x, h):
    """One classical Runge-Kutta step of x' = f(x)."""
    if not h > 0:
        raise ValueError("step size must be positive")
    # blow-up is reported through the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NonFiniteState("state became non-finite during integration")
    return x_next


@dataclass
class Trajectory:
    times: np.ndarray
    omega: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    z: np.ndarray
    delta_norm: np.ndarray
    V: np.ndarray
    W: np.ndarray
    composite: np.ndarray
    net_load: np.ndarray  # total load in effect at each sample (not written to CSV)

    @property
    def m(self) -> int:
        return self.eta.shape[1]

    def __len__(self):
        return len(self.times)

    @classmethod
    def empty(cls, m):
        z = np.zeros(0)
        zm = np.zeros((0, m))
        return cls(z, zm, zm, zm, z, z, z, z, z, z)


@dataclass
class Metrics:
    final_freq_dev_inf: float
    consensus_spread: float
    optimality_gap_inf: float
    limit_violations: int
    settled: bool
    balance_residual: float  # 1^T u - d at t_end

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class _Certificate:
    basis: np.ndarray
    P: np.ndarray | None
    alpha: float


def _lyapunov_objects(cfg: ScenarioConfig) -> _Certificate:
    m = cfg.m
    if m < 2:
        return _Certificate(np.zeros((m, 0)), np.zeros((0, 0)), 1.0)
    lap = gr.build_laplacian(cfg.graph)
    basis = gr.build_complement_basis(m)
    try:
        P, rho = an.solve_lyapunov_P(-gr.projected_laplacian(lap, basis))
    except NotHurwitz:
        return _Certificate(basis, None, float("nan"))
    b = plant_beta(cfg.plant)
    kappa = an.compute_kappa(cfg.bank, lap, basis, b)
    return _Certificate(basis, P, 2.0 * an.alpha_star(b, kappa, rho))


def _event_steps(cfg: ScenarioConfig, h, time_scale=1.0):
    """Snap event times (divided by ``time_scale``) to the integration grid."""
    out = []
    for ev in cfg.events:
        t = ev.time / time_scale
        k = int(round(t / h))
        if abs(k * h - t) > 1e-9 * h:
            log.warning("event at t=%g snapped to grid time %g", t, k * h)
        out.append((k, ev.delta))
    return out


def _segment_loads(cfg, steps):
    """Per-machine load vector in effect from each step index onwards."""
    loads = [(0, np.array(cfg.loads, dtype=float))]
    for k, delta in steps:
        loads.append((k, loads[-1][1] + delta))
    return loads


def _fill_cascade_columns(cfg, traj: Trajectory, cert: _Certificate):
    eta = traj.eta
    traj.z = eta.mean(axis=1)
    delta = eta @ cert.basis
    traj.delta_norm = np.linalg.norm(delta, axis=1)
    traj.V = np.empty(len(traj))
    # equilibrium price per distinct load level
    for d in np.unique(traj.net_load):
        sel = traj.net_load == d
        z_bar = an.kkt_solve(cfg.bank, float(d)).lambda_bar
        traj.V[sel] = an.lyapunov_V(cfg.bank, traj.z[sel], z_bar)
    if cert.P is None:
        traj.W = np.full(len(traj), np.nan)
        traj.composite = np.full(len(traj), np.nan)
    else:
        traj.W = np.einsum("ni,ij,nj->n", delta, cert.P, delta)
        traj.composite = traj.V + cert.alpha * traj.W


def initial_eta(cfg: ScenarioConfig) -> np.ndarray:
    eta0 = cfg.controller.eta0
    if isinstance(eta0, str):
        # start at the scheduled operating point: u(0) = u_star
        return cfg.bank.grad(cfg.bank.u_star)
    return np.array(eta0, dtype=float)


def _count_violations(bank, u):
    return int(np.count_nonzero((u <= bank.lower) | (u >= bank.upper)))


def run_scenario(cfg: ScenarioConfig):
    """Integrate plant and DAPI controller jointly; return (Trajectory, Metrics)."""
    plant, bank = cfg.plant, cfg.bank
    n, m = plant.n, cfg.m
    h = cfg.step
    n_steps = int(round(cfg.t_end / h))
    A, Bu, E = plant.matrices()
    lap = gr.build_laplacian(cfg.graph)
    tau = cfg.controller.tau
    meas = n + plant.controllable_index

    F = np.zeros((3 * n + m, 3 * n + m))
    F[:3 * n, :3 * n] = A
    F[3 * n + np.arange(m), meas] = -1.0 / tau
    F[3 * n:, 3 * n:] = -lap / tau
    G = np.zeros((3 * n + m, m))
    G[:3 * n] = Bu

    steps = _event_steps(cfg, h)
    segments = _segment_loads(cfg, steps)
    post_load = segments[-1][1].sum()
    kkt_final = an.kkt_solve(bank, float(post_load))

    eta0 = initial_eta(cfg)
    u0 = bank.conj_grad(eta0)
    x = np.concatenate([plant.steady_state(u0, Disturbance(segments[0][1])).to_vector(), eta0])

    bias = np.zeros(3 * n + m)
    cg = bank.conj_grad

    def f(xx):
        return F @ xx + G @ cg(xx[3 * n:]) + bias

    stride = cfg.record_every
    n_rec = n_steps // stride + 1
    times = np.empty(n_rec)
    omega = np.empty((n_rec, m))
    etas = np.empty((n_rec, m))
    us = np.empty((n_rec, m))
    net = np.empty(n_rec)

    seg_idx = 0
    violations = _count_violations(bank, u0)
    rec = 0
    for k in range(n_steps + 1):
        while seg_idx < len(segments) and segments[seg_idx][0] <= k:
            bias[:3 * n] = E @ segments[seg_idx][1]
            current = segments[seg_idx][1].sum()
            seg_idx += 1
        if k % stride == 0:
            eta = x[3 * n:]
            times[rec] = k * h
            omega[rec] = x[meas]
            etas[rec] = eta
            us[rec] = cg(eta)
            net[rec] = current
            rec += 1
        if k == n_steps:
            break
        x = rk4_step(f, x, h)
        violations += _count_violations(bank, cg(x[3 * n:]))

    traj = Trajectory(times[:rec], omega[:rec], etas[:rec], us[:rec],
                      None, None, None, None, None, net[:rec])
    _fill_cascade_columns(cfg, traj, _lyapunov_objects(cfg))

    eta_end = x[3 * n:]
    u_end = cg(eta_end)
    freq_dev = np.max(np.abs(traj.omega), axis=1)
    spread = np.ptp(traj.eta, axis=1)
    tail = slice(int(0.9 * len(traj)), None)
    metrics = Metrics(
        final_freq_dev_inf=float(np.max(np.abs(x[meas]))),
        consensus_spread=float(np.ptp(eta_end)),
        optimality_gap_inf=float(np.max(np.abs(u_end - kkt_final.u_bar))),
        limit_violations=violations,
        settled=bool(np.all(freq_dev[tail] <= FREQ_TOL) and np.all(spread[tail] <= SPREAD_TOL)),
        balance_residual=float(u_end.sum() - post_load),
    )
    return traj, metrics


def run_reduced(cfg: ScenarioConfig, eta0=None, t_end=None, step=None) -> Trajectory:
    """Integrate the slow price dynamics with the plant at its steady-state map.

    Time is the slow variable ell = t / tau; by default the horizon, step and
    event times of ``cfg`` are rescaled accordingly. ``omega`` holds the
    steady-state frequency implied by the current set-points.
    """
    tau = cfg.controller.tau
    h = cfg.step / tau if step is None else step
    horizon = cfg.t_end / tau if t_end is None else t_end
    n_steps = int(round(horizon / h))
    bank = cfg.bank
    m = cfg.m
    lap = gr.build_laplacian(cfg.graph)
    b = plant_beta(cfg.plant)
    segments = _segment_loads(cfg, _event_steps(cfg, h, time_scale=tau))
    eta = initial_eta(cfg) if eta0 is None else np.array(eta0, dtype=float)
    d = 0.0

    def f(e):
        return -(bank.conj_grad(e).sum() - d) / b - lap @ e

    stride = cfg.record_every
    n_rec = n_steps // stride + 1
    times = np.empty(n_rec)
    etas = np.empty((n_rec, m))
    net = np.empty(n_rec)
    seg_idx = 0
    rec = 0
    for k in range(n_steps + 1):
        while seg_idx < len(segments) and segments[seg_idx][0] <= k:
            d = float(segments[seg_idx][1].sum())
            seg_idx += 1
        if k % stride == 0:
            times[rec] = k * h
            etas[rec] = eta
            net[rec] = d
            rec += 1
        if k == n_steps:
            break
        eta = rk4_step(f, eta, h)

    etas, net = etas[:rec], net[:rec]
    us = bank.conj_grad(etas)
    omega = np.repeat(((us.sum(axis=1) - net) / b)[:, None], m, axis=1)
    traj = Trajectory(times[:rec], omega, etas, us, None, None, None, None, None, net)
    _fill_cascade_columns(cfg, traj, _lyapunov_objects(cfg))
    return traj


def csv_header(m):
    cols = ["t"]
    for prefix in ("omega", "eta", "u"):
        cols += [f"{prefix}_{i + 1}" for i in range(m)]
    return cols + ["z", "delta_norm", "V", "W", "composite"]


def write_csv(traj: Trajectory, path):
    path = Path(path)
    m = traj.m
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(m))
        block = np.column_stack([traj.times, traj.omega, traj.eta, traj.u, traj.z,
                                 traj.delta_norm, traj.V, traj.W, traj.composite]) \
            if len(traj) else np.zeros((0, 3 * m + 6))
        for row in block:
            writer.writerow(["%.15g" % v for v in row])


def read_csv(path):
    """Return (header, data array) from a trajectory CSV."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    return header, data


PLOT_SCRIPT = '''"""Plot a DAPI trajectory CSV: frequencies, prices and set-points."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
df = pd.read_csv(path)
fig, axes = plt.subplots(4, 1, sharex=True, figsize=(8, 10))
for prefix, ax, label in (("omega", axes[0], "frequency deviation"),
                          ("eta", axes[1], "marginal cost"),
                          ("u", axes[2], "set-point (p.u.)")):
    cols = [c for c in df.columns if c.startswith(prefix + "_")]
    df.plot(x="t", y=cols, ax=ax, legend=False)
    ax.set_ylabel(label)
df.plot(x="t", y=["V", "composite"], ax=axes[3], logy=True)
axes[3].set_xlabel("t")
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
'''


def write_plot_script(csv_path, script_path):
    Path(script_path).write_text(PLOT_SCRIPT.format(csv=str(csv_path)))

import numpy as np
import pytest
import scipy.linalg as sla

from dapi.errors import SingularNetwork
from dapi.plant import (Disturbance, LinearPlant, MachineParams, PlantState, beta,
                        equilibrium_frequency_map, output_frequencies, ring_susceptances)
from dapi.scenarios import default_plant
from dapi.sim import rk4_step


def zeros_state(n):
    return PlantState(np.zeros(n), np.zeros(n), np.zeros(n))


def random_plant(rng, n=5, m=None):
    machines = [MachineParams(rng.uniform(2, 15), rng.uniform(0.5, 2), rng.uniform(0.2, 2),
                              rng.uniform(0.03, 0.1), controllable=(m is None or i < m))
                for i in range(n)]
    t = ring_susceptances(n, 1.0) * rng.uniform(1, 10, (n, n))
    t = np.triu(t) + np.triu(t).T
    return LinearPlant(machines, t)


def test_single_machine_origin_is_fixed():
    p = LinearPlant([MachineParams(10, 1, 0.5, 0.05)], np.zeros((1, 1)))
    d = p.derivative(zeros_state(1), [0.0], Disturbance(np.zeros(1))).to_vector()
    np.testing.assert_array_equal(d, 0.0)


def test_single_machine_load_step():
    p = LinearPlant([MachineParams(10, 1, 0.5, 0.05)], np.zeros((1, 1)))
    d = p.derivative(zeros_state(1), [0.0], Disturbance(np.array([0.1])))
    assert d.delta_omega[0] == pytest.approx(-0.1 / 10, abs=1e-17)


def test_beta_examples():
    assert beta(LinearPlant([MachineParams(10, 1, 0.5, 1.0)], np.zeros((1, 1)))) == 2.0
    assert beta(default_plant()) == pytest.approx(105.0, abs=1e-12)


def test_steady_state_is_fixed_point(rng):
    for _ in range(20):
        p = random_plant(rng, n=5, m=3)
        u = rng.uniform(-1, 1, 3)
        dist = Disturbance(rng.uniform(-1, 1, 5))
        x = p.steady_state(u, dist)
        assert x.delta_theta[0] == 0.0
        assert np.max(np.abs(p.derivative(x, u, dist).to_vector())) <= 1e-10


def test_steady_state_balanced_and_origin():
    p = default_plant()
    u = np.array([0.1, 0.2, 0.0, -0.1, 0.05])
    x = p.steady_state(u, Disturbance(u.copy()))
    np.testing.assert_allclose(x.delta_omega, 0.0, atol=1e-15)
    x0 = p.steady_state(np.zeros(5), Disturbance(np.zeros(5)))
    np.testing.assert_array_equal(x0.to_vector(), 0.0)


def test_steady_state_two_machine_hand_solution():
    t = 4.0
    mc = MachineParams(5.0, 1.0, 0.5, 0.1)
    p = LinearPlant([mc, mc], [[0, t], [t, 0]])
    x = p.steady_state([0.1, 0.0], Disturbance(np.zeros(2)))
    b = 2 * (1.0 + 10.0)
    w = 0.1 / b
    np.testing.assert_allclose(x.delta_omega, [w, w], rtol=1e-15)
    np.testing.assert_allclose(x.delta_pm, [0.1 - w / 0.1, -w / 0.1], rtol=1e-14)
    # half of the injection flows over the line: t (theta_1 - theta_2) = 0.05
    np.testing.assert_allclose(x.delta_theta, [0.0, -0.05 / t], rtol=1e-14)
    rel = x.delta_theta - x.delta_theta.mean()
    assert rel[0] == pytest.approx(-rel[1], rel=1e-14)


def test_disconnected_network_rejected():
    mc = MachineParams(5.0, 1.0, 0.5, 0.1)
    with pytest.raises(SingularNetwork):
        LinearPlant([mc, mc], np.zeros((2, 2)))


def test_output_frequencies():
    p = default_plant()
    x = p.steady_state(np.full(5, 0.1), Disturbance(np.full(5, 0.1)))
    np.testing.assert_array_equal(output_frequencies(x, p.controllable_index), np.zeros(5) + x.delta_omega)
    s = PlantState(np.zeros(4), np.full(4, 0.3), np.zeros(4))
    np.testing.assert_array_equal(output_frequencies(s, [0, 2]), [0.3, 0.3])
    s = PlantState(np.zeros(4), np.array([1.0, 2.0, 3.0, 4.0]), np.zeros(4))
    np.testing.assert_array_equal(output_frequencies(s, [3, 1]), [4.0, 2.0])


def test_equilibrium_frequency_map_examples():
    p = default_plant()
    u = np.full(5, 0.2)
    np.testing.assert_array_equal(equilibrium_frequency_map(p, u, Disturbance(np.full(5, 0.2))), 0.0)
    d = Disturbance(np.array([0.79, 0.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(equilibrium_frequency_map(p, u, d), 0.002, rtol=1e-12)


def test_equilibrium_map_matches_steady_state(rng):
    for _ in range(100):
        p = random_plant(rng, n=6, m=4)
        u = rng.uniform(-1, 1, 4)
        dist = Disturbance(rng.uniform(-1, 1, 6))
        lhs = equilibrium_frequency_map(p, u, dist)
        rhs = output_frequencies(p.steady_state(u, dist), p.controllable_index)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_matrices_match_derivative_and_superposition(rng):
    p = random_plant(rng, n=5, m=3)
    A, B, E = p.matrices()

    def f(x, u, d):
        return p.derivative(PlantState.from_vector(x), u, Disturbance(d)).to_vector()

    for _ in range(20):
        x1, x2 = rng.normal(size=15), rng.normal(size=15)
        u1, u2 = rng.normal(size=3), rng.normal(size=3)
        d1, d2 = rng.normal(size=5), rng.normal(size=5)
        np.testing.assert_allclose(f(x1, u1, d1), A @ x1 + B @ u1 + E @ d1, atol=1e-12)
        a, b = rng.normal(size=2)
        lhs = f(a * x1 + b * x2, a * u1 + b * u2, a * d1 + b * d2)
        assert np.max(np.abs(lhs - (a * f(x1, u1, d1) + b * f(x2, u2, d2)))) <= 1e-12


def test_reference_angle_stays_pinned(rng):
    p = default_plant()
    x = rng.uniform(-0.5, 0.5, 15)
    x[0] = 0.0
    u, d = rng.uniform(-0.1, 0.1, 5), rng.uniform(-0.1, 0.1, 5)
    A, B, E = p.matrices()
    for _ in range(200):
        x = rk4_step(lambda s: A @ s + B @ u + E @ d, x, 0.05)
        assert x[0] == 0.0


def test_open_loop_decay_to_steady_state(rng):
    p = default_plant()
    A, B, E = p.matrices()
    for _ in range(3):
        u, d = rng.uniform(-0.2, 0.2, 5), rng.uniform(-0.2, 0.2, 5)
        target = p.steady_state(u, Disturbance(d)).to_vector()
        x = target + rng.uniform(-0.5, 0.5, 15)
        x[0] = 0.0
        bias = B @ u + E @ d
        for _ in range(50_000):
            x = rk4_step(lambda s: A @ s + bias, x, 0.01)
        assert np.max(np.abs(x - target)) <= 1e-6


def test_open_loop_matrix_hurwitz_on_reduced_coordinates():
    # drop the pinned reference angle; the rest must be exponentially stable
    A = default_plant().matrices()[0][1:, 1:]
    assert np.all(np.linalg.eigvals(A).real < 0)
    assert sla.norm(sla.expm(500 * A)) < 1e-10

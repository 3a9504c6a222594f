import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from dapi.convex import (BarrierQuadraticObjective, ObjectiveBank, _ULP,
                         strong_convexity_parameter)
from dapi.errors import DomainViolation

G201 = BarrierQuadraticObjective(1.0, 0.9, 0.001, 0.8, 1.0)
G503 = BarrierQuadraticObjective(0.1, 0.6539, 0.001, 0.6539 - 0.1, 0.6539 + 0.1)


@st.composite
def objectives(draw):
    q = draw(st.floats(0.05, 5.0))
    us = draw(st.floats(-2.0, 2.0))
    if draw(st.booleans()):
        lo = us - draw(st.floats(0.01, 1.0))
        hi = us + draw(st.floats(0.01, 1.0))
        return BarrierQuadraticObjective(q, us, draw(st.floats(1e-5, 0.1)), lo, hi)
    return BarrierQuadraticObjective(q, us)


def interior(f, frac):
    if math.isinf(f.lower):
        return f.u_star + 10.0 * (2 * frac - 1)
    return f.lower + frac * (f.upper - f.lower)


fracs = st.floats(1e-6, 1 - 1e-6)


def test_value_examples():
    assert BarrierQuadraticObjective(1.0, 0.0).value(2.0) == 2.0
    assert G503.value(0.6539) == pytest.approx(-0.002 * math.log(0.1), abs=1e-15)
    assert G503.value(0.6539) == pytest.approx(0.004605, abs=5e-7)
    with pytest.raises(DomainViolation):
        G503.value(G503.upper)


def test_grad_examples():
    assert BarrierQuadraticObjective(1.0, 0.0).grad(0.5) == 0.5
    assert G503.grad(0.6539) == pytest.approx(0.0, abs=1e-15)
    assert G201.grad(0.95) == pytest.approx(0.05 + 0.001 / 0.05 - 0.001 / 0.15, abs=1e-15)
    with pytest.raises(DomainViolation):
        G201.grad(0.8)


def test_conj_grad_examples():
    assert BarrierQuadraticObjective(1.0, 0.0).conj_grad(2.0) == 2.0
    assert G201.conj_grad(0.0) == pytest.approx(0.9, abs=1e-15)


def test_conj_grad_against_grid_scan():
    # monotone scan of the gradient on a 10^7-point grid brackets the root
    grid = np.linspace(G503.lower, G503.upper, 10_000_001)[1:-1]
    g = G503.q * (grid - G503.u_star) + G503.gamma / (G503.upper - grid) - G503.gamma / (grid - G503.lower)
    k = np.searchsorted(g, 0.05)
    u = G503.conj_grad(0.05)
    assert grid[k - 1] <= u <= grid[k]
    assert 0.6539 < u < 0.7539
    assert abs(G503.grad(u) - 0.05) <= 1e-12


def test_conj_grad_narrow_interval_far_from_zero():
    # width 0.02 around 2.0: the initial bracket offset is below one ulp of the limits
    f = BarrierQuadraticObjective(1.0, 2.0, 0.0625, 1.98828125, 2.01)
    for eta in (-1e12, -1.0, 0.0, 1.0, 1e12):
        assert f.lower < f.conj_grad(eta) < f.upper
    assert abs(f.grad(f.conj_grad(1.0)) - 1.0) <= 1e-9


def test_conj_value_examples():
    assert BarrierQuadraticObjective(1.0, 0.0).conj_value(2.0) == 2.0
    u0 = 0.93
    eta = G201.grad(u0)
    assert G201.conj_value(eta) == pytest.approx(eta * u0 - G201.value(u0), abs=1e-14)


def test_conj_value_against_grid_sup():
    grid = np.linspace(G201.lower, G201.upper, 2_000_001)[1:-1]
    vals = 0.05 * grid - (0.5 * (grid - 0.9) ** 2 - 0.001 * (np.log(1.0 - grid) + np.log(grid - 0.8)))
    assert G201.conj_value(0.05) == pytest.approx(vals.max(), abs=1e-9)


def test_strong_convexity_parameter(table1):
    assert strong_convexity_parameter(table1) == 0.1
    assert strong_convexity_parameter(ObjectiveBank([BarrierQuadraticObjective(2.0, 0.0)])) == 2.0
    bank = ObjectiveBank([BarrierQuadraticObjective(1.0, 0.0), BarrierQuadraticObjective(0.5, 0.0)])
    assert strong_convexity_parameter(bank) == 0.5


@pytest.mark.parametrize("kwargs", [
    dict(q=0.0, u_star=0.0),
    dict(q=1.0, u_star=0.0, gamma=-1.0),
    dict(q=1.0, u_star=0.0, gamma=0.1),
    dict(q=1.0, u_star=0.0, gamma=0.1, lower=0.0),
    dict(q=1.0, u_star=0.0, gamma=0.0, lower=-1.0, upper=1.0),
    dict(q=1.0, u_star=0.0, gamma=0.1, lower=1.0, upper=1.0),
])
def test_invalid_objectives(kwargs):
    with pytest.raises(ValueError):
        BarrierQuadraticObjective(**kwargs)


@given(objectives(), fracs)
def test_inverse_pair(f, frac):
    u = interior(f, frac)
    assert abs(f.conj_grad(f.grad(u)) - u) <= 1e-9


@given(objectives(), st.lists(fracs, min_size=2, max_size=20, unique=True))
def test_grad_strictly_increasing(f, fs):
    us = sorted({interior(f, x) for x in fs})
    g = [f.grad(u) for u in us]
    assert all(b > a for a, b in zip(g, g[1:]))


@given(objectives(), fracs, fracs)
def test_strong_convexity(f, a, b):
    u, v = interior(f, a), interior(f, b)
    gu, gv = f.grad(u), f.grad(v)
    lhs = (gu - gv) * (u - v)
    # subtracting two nearly equal gradients loses a few ulp of their magnitude
    slack = 4 * _ULP * (abs(gu) + abs(gv)) * abs(u - v)
    assert lhs >= f.mu * (u - v) ** 2 * (1 - 1e-12) - slack


@given(objectives(), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_conjugate_strong_smoothness(f, a, b):
    assume(a != b)
    assert abs(f.conj_grad(a) - f.conj_grad(b)) <= abs(a - b) / f.mu * (1 + 1e-9) + 4 * _ULP * (1 + abs(f.u_star))


@given(objectives(), st.floats(-1e12, 1e12))
def test_barrier_containment(f, eta):
    u = f.conj_grad(eta)
    assert f.lower < u < f.upper


@given(objectives(), st.floats(-50, 50), st.floats(-50, 50))
def test_bregman_positivity(f, z, zb):
    assume(abs(z - zb) > 1e-3)
    assert f.conj_value(z) - f.conj_value(zb) - f.conj_grad(zb) * (z - zb) > 0


def test_bank_vectorized_matches_scalar(rng, table1):
    eta = rng.uniform(-2, 2, size=(50, 5))
    u = table1.conj_grad(eta)
    for k in range(50):
        for i, f in enumerate(table1):
            assert u[k, i] == f.conj_grad(eta[k, i])
            assert table1.conj_value(eta[k])[i] == pytest.approx(f.conj_value(eta[k, i]), rel=1e-13, abs=1e-15)
    mid = np.array(table1.u_star) + 0.01
    np.testing.assert_allclose(table1.grad(mid), [f.grad(x) for f, x in zip(table1, mid)], rtol=1e-14)
    np.testing.assert_allclose(table1.value(mid), [f.value(x) for f, x in zip(table1, mid)], rtol=1e-14)


def test_bank_quadratic_closed_forms():
    bank = ObjectiveBank([BarrierQuadraticObjective(2.0, 1.0), BarrierQuadraticObjective(0.5, -1.0)])
    eta = np.array([3.0, -1.0])
    np.testing.assert_allclose(bank.conj_grad(eta), [1.0 + 1.5, -1.0 - 2.0])
    np.testing.assert_allclose(bank.conj_value(eta), [3.0 + 9 / 4, 1.0 + 1.0])


def test_bank_rejects_empty():
    with pytest.raises(ValueError):
        ObjectiveBank([])

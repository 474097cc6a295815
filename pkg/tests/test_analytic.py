import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import K, wave
from ulgf.analytic import (
    IncidentWave, MieTruncationWarning, mie_scattered, mie_scattered_radial_derivative, mie_solution, neumann_data,
    plane_wave, plane_wave_gradient,
)
from ulgf.errors import DomainError
from ulgf.lgf import StencilOperator
from ulgf.specfun import bessel_j

R = 0.5


def _circle_points(r, n=360):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def test_incident_wave_validation():
    assert IncidentWave.from_angle(2.0, math.pi / 3).direction == pytest.approx((0.5, math.sqrt(3) / 2))
    with pytest.raises(DomainError):
        IncidentWave(-1.0, (1, 0))
    with pytest.raises(DomainError):
        IncidentWave(1.0, (1, 1))


def test_plane_wave_basics():
    w = wave()
    assert plane_wave(w, (0.0, 0.0)) == 1
    pts = np.random.default_rng(3).uniform(-5, 5, (100, 2))
    assert np.abs(np.abs(plane_wave(w, pts)) - 1).max() <= 1e-14


def test_jacobi_anger():
    w = IncidentWave.from_angle(1.0, 0.4)
    kr, M = 5.0, 60
    for theta in np.linspace(0, 2 * np.pi, 13):
        s = sum(1j**m * bessel_j(m, kr) * np.exp(1j * m * (theta - w.theta)) for m in range(M + 1))
        s += sum(1j**m * bessel_j(m, kr) * np.exp(-1j * m * (theta - w.theta)) for m in range(1, M + 1))
        p = (kr * math.cos(theta), kr * math.sin(theta))
        assert abs(s - plane_wave(w, p)) <= 1e-10


def test_neumann_data():
    w = wave()
    d = np.array(w.direction)
    assert neumann_data(w, (0.3, -0.2), (-d[1], d[0])) == pytest.approx(0, abs=1e-15)
    assert neumann_data(w, (0.0, 0.0), d) == pytest.approx(1j * K)
    p, n = np.array([0.31, -0.47]), np.array([0.6, 0.8])
    step = 1e-6
    fd = (plane_wave(w, p + step * n) - plane_wave(w, p - step * n)) / (2 * step)
    assert abs(neumann_data(w, p, n) - fd) <= 1e-6 * abs(fd)
    assert np.allclose(plane_wave_gradient(w, p) @ n, neumann_data(w, p, n))


def test_mie_tm_boundary_condition():
    w = wave()
    sol = mie_solution(w, R, "TM")
    pts = _circle_points(R)
    assert np.abs(mie_scattered(sol, pts) + plane_wave(w, pts)).max() <= 1e-10


def test_mie_te_boundary_condition():
    w = wave()
    sol = mie_solution(w, R, "TE")
    pts = _circle_points(R)
    dinc = neumann_data(w, pts, pts / R)
    assert np.abs(mie_scattered_radial_derivative(sol, pts) + dinc).max() <= 1e-8


def test_mie_truncation_stability():
    w = wave()
    pts = _circle_points(1.0, 90)
    a = mie_scattered(mie_solution(w, R, "TM", truncation=80), pts)
    b = mie_scattered(mie_solution(w, R, "TM", truncation=100), pts)
    assert np.abs(a - b).max() <= 1e-12


def test_mie_truncation_warning():
    with pytest.warns(MieTruncationWarning):
        mie_solution(wave(), R, "TM", truncation=5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mie_solution(wave(), R, "TM")


@pytest.mark.parametrize("pol", ["TM", "TE"])
def test_mie_coefficients_bounded(pol):
    sol = mie_solution(wave(), R, pol)
    assert np.abs(sol.coefficients).max() <= 1.0
    assert np.abs(sol.ratio).max() <= 1.0


def test_mie_negative_orders():
    # a_{-m} H_{-m} e^{-i m t} must be the reflection-consistent partner of the +m term
    w = IncidentWave.from_angle(K, 0.0)
    sol = mie_solution(w, R, "TM")
    M = sol.truncation
    for m in (1, 2, 7):
        assert sol.coefficients[M - m] == pytest.approx((-1) ** m * sol.coefficients[M + m])


def test_mie_inside_rejected():
    sol = mie_solution(wave(), R, "TM")
    with pytest.raises(DomainError):
        mie_scattered(sol, (0.1, 0.0))
    with pytest.raises(ValueError):
        mie_solution(wave(), R, "XX")


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0, 2 * math.pi), r=st.floats(0.6, 1.5))
def test_mie_field_is_outgoing_solution(theta, r):
    """Continuous Helmholtz residual of the series by a fine 5-point stencil."""
    sol = mie_solution(wave(), R, "TM")
    c = np.array([r * math.cos(theta), r * math.sin(theta)])
    h = 1e-3
    off = h * np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]])
    v = mie_scattered(sol, c + off)
    lap = (v[1:].sum() - 4 * v[0]) / h**2
    assert abs(lap + K**2 * v[0]) <= 1e-3 * K**2 * max(abs(v[0]), 1e-3)


def test_mie_discrete_residual_order():
    sol = mie_solution(wave(), R, "TM")
    c = np.array([0.7, 0.4])
    res = []
    for h in (0.04, 0.02, 0.01):
        ix = np.arange(-1, 2)
        pts = c + h * np.stack(np.meshgrid(ix, ix), axis=-1)
        v = mie_scattered(sol, pts)
        res.append(abs(StencilOperator((K * h) ** 2)(v)[0, 0]) / h**2)
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    assert all(1.7 <= o <= 2.3 for o in orders), orders

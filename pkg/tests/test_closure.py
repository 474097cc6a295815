import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import patch_values, problem, robin_row_errors, wave, zero_bc
from ulgf.analytic import neumann_data, plane_wave
from ulgf.closure import BoundaryCondition, assemble_phi, lagrange_basis_1d

NODES = np.array([0.2, 0.45, 0.7])


def test_cardinal_property_exact():
    vals, _ = lagrange_basis_1d(NODES, NODES)
    assert np.array_equal(vals, np.eye(3))


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-0.05, 0.95))
def test_partition_of_unity(x):
    vals, ders = lagrange_basis_1d(NODES, np.array(x))
    assert vals.sum() == pytest.approx(1.0, abs=1e-13)
    assert ders.sum() == pytest.approx(0.0, abs=1e-11)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-0.05, 0.95), c=st.tuples(*[st.floats(-3, 3)] * 3))
def test_quadratic_reproduction(x, c):
    f = c[0] + c[1] * NODES + c[2] * NODES**2
    vals, ders = lagrange_basis_1d(NODES, np.array(x))
    assert vals @ f == pytest.approx(c[0] + c[1] * x + c[2] * x * x, abs=1e-12)
    assert ders @ f == pytest.approx(c[1] + 2 * c[2] * x, abs=1e-10)


def test_derivative_matches_finite_difference():
    h = NODES[1] - NODES[0]
    d = 1e-6 * h
    for x in (0.23, 0.5, 0.69):
        _, ders = lagrange_basis_1d(NODES, np.array(x))
        vp, _ = lagrange_basis_1d(NODES, np.array(x + d))
        vm, _ = lagrange_basis_1d(NODES, np.array(x - d))
        fd = (vp - vm) / (2 * d)
        assert np.allclose(ders, fd, rtol=1e-6, atol=1e-6 * np.abs(ders).max())





@pytest.mark.parametrize("name", ["circle", "triangle", "rods"])
def test_row_structure(name):
    cut, _, _ = problem(name, 128)
    cl = assemble_phi(cut, zero_bc(1.0, 0.3))
    nnz = np.diff(cl.phi_plus.indptr) + np.diff(cl.phi_minus.indptr)
    assert cl.phi_plus.shape == (len(cut.gamma_minus), len(cut.gamma_plus_aug))
    assert cl.phi_minus.shape == (len(cut.gamma_minus),) * 2
    assert nnz.max() <= 9
    for k in range(0, len(cut.gamma_minus), 17):
        cols = {tuple(cut.gamma_plus_aug[j]) for j in cl.phi_plus[k].indices}
        cols |= {tuple(cut.gamma_minus[j]) for j in cl.phi_minus[k].indices}
        assert cols <= {tuple(p) for p in cut.patches[k]}


def test_dirichlet_partition_of_unity():
    cut, _, _ = problem("triangle", 128)
    cl = assemble_phi(cut, zero_bc(0.0, 1.0))
    up, um = patch_values(cut, lambda p: np.ones(len(p)))
    assert np.abs(cl.phi_plus @ up + cl.phi_minus @ um - 1).max() <= 1e-12


def test_neumann_linear_exact():
    cut, _, _ = problem("circle", 128)
    cl = assemble_phi(cut, zero_bc(1.0, 0.0))
    c = np.array([0.7, -1.3])
    up, um = patch_values(cut, lambda p: p @ c)
    assert np.abs(cl.phi_plus @ up + cl.phi_minus @ um - cut.normals @ c).max() <= 1e-10


def test_biquadratic_reproduction():
    cut, _, _ = problem("rods", 128)
    alpha, beta = 0.8 - 0.1j, 1.7 + 0.4j
    cl = assemble_phi(cut, zero_bc(alpha, beta))

    def f(p):
        x, y = p[:, 0], p[:, 1]
        return 1 + x - 2 * y + x * y + 3 * x * x * y * y - y * y

    def grad(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([1 + y + 6 * x * y * y, -2 + x + 6 * x * x * y - 2 * y])

    up, um = patch_values(cut, f)
    expect = alpha * np.einsum("kd,kd->k", grad(cut.points), cut.normals) + beta * f(cut.points)
    assert np.abs(cl.phi_plus @ up + cl.phi_minus @ um - expect).max() <= 1e-10


def test_robin_rows_second_order():
    e = robin_row_errors()
    orders = [math.log2(a / b) for a, b in zip(e, e[1:])]
    assert all(1.7 <= o <= 2.3 for o in orders), orders


def test_tm_te_data():
    w = wave()
    cut, _, _ = problem("circle", 64)
    tm, te = BoundaryCondition.tm(w), BoundaryCondition.te(w)
    assert (tm.alpha, tm.beta, te.alpha, te.beta) == (0, 1, 1, 0)
    assert np.allclose(tm.g(cut.points, cut.normals), -plane_wave(w, cut.points))
    assert np.allclose(te.g(cut.points, cut.normals), -neumann_data(w, cut.points, cut.normals))
    cl = assemble_phi(cut, tm)
    assert np.array_equal(cl.rhs, tm.g(cut.points, cut.normals))


def test_zero_condition_rejected():
    with pytest.raises(ValueError):
        BoundaryCondition(0, 0, lambda p, n: 0)

import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import table_for
from ulgf.errors import DomainError, LgfRangeError, QuadratureError, ResonanceError
from ulgf.lgf import (
    StencilOperator, cached_lgf_table, compute_lgf_table, lgf_at, lgf_quadrature, lgf_quadrature_oracle,
    load_table, ring_solution_check, save_table, stencil_residual,
)
from ulgf.specfun import lgf_diagonal

OMEGAS = (0.5, 2.0, 6.0)


def test_stencil_operator_definition(rng):
    u = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    out = StencilOperator(0.7)(u)
    assert out.shape == (3, 4)
    i, j = 2, 3
    expect = u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] + (0.7 - 4) * u[i, j]
    assert out[i - 1, j - 1] == pytest.approx(expect, abs=1e-15)
    with pytest.raises(DomainError):
        StencilOperator(0.0)


@pytest.mark.parametrize("omega2", OMEGAS)
def test_table_residual_and_diagonal(omega2):
    t = table_for(omega2, 256)
    assert stencil_residual(t) <= 1e-10
    dev = max(abs(t(n, n) - lgf_diagonal(n, omega2)) for n in range(21))
    assert dev <= 5e-6


@pytest.mark.parametrize("omega2", OMEGAS)
def test_table_against_oracle(omega2):
    t = table_for(omega2, 256)
    for m in ((0, 0), (1, 0), (5, 3), (10, 10)):
        assert abs(t(*m) - lgf_quadrature_oracle(omega2, *m)) <= 1e-6


def test_table_symmetry_exact():
    t = table_for(0.5, 256)
    assert np.array_equal(t.values, t.values.T)
    full = t.full(30)
    assert np.array_equal(full, full[::-1, :]) and np.array_equal(full, full[:, ::-1])


def test_table_box_stabilisation():
    a, b = table_for(0.5, 256), compute_lgf_table(0.5, 320)
    assert np.abs(a.values[:21, :21] - b.values[:21, :21]).max() <= 5e-6


def test_table_values_read_only():
    t = table_for(0.5, 256)
    with pytest.raises(ValueError):
        t.values[0, 0] = 0


def test_lgf_at_lookup():
    t = table_for(2.0, 256)
    assert t(3, -7) == t(7, 3)
    assert t(0, 0) == t.values[0, 0]
    got = lgf_at(t, np.array([[1, -2], [5, 0]]), np.array([[0, 3], [-5, 9]]))
    assert got.shape == (2, 2) and got[1, 0] == t(5, 5) and got[1, 1] == t(0, 9)
    with pytest.raises(LgfRangeError) as err:
        t(t.box_n + 1, 0)
    assert err.value.required_box_n == t.box_n + 1
    assert str(t.box_n + 1) in str(err.value)


@settings(max_examples=50, deadline=None)
@given(m1=st.integers(-256, 256), m2=st.integers(-256, 256))
def test_lgf_even_and_symmetric(m1, m2):
    t = table_for(6.0, 256)
    v = t(m1, m2)
    assert v == t(m2, m1) == t(-m1, m2) == t(m1, -m2)


def test_compute_guards():
    with pytest.raises(DomainError, match="nudge"):
        compute_lgf_table(4.0, 256)
    with pytest.raises(DomainError):
        compute_lgf_table(-0.1, 256)
    with pytest.raises(DomainError):
        compute_lgf_table(0.5, 100)


def _resonant_omega2(box_n):
    # lowest Dirichlet mode of the (2 box_n + 1)**2 box
    return 4.0 - 4.0 * math.cos(math.pi / (2 * box_n + 2))


def test_resonance_guard_and_retry(tmp_path):
    w = _resonant_omega2(200)
    with pytest.raises(ResonanceError) as err:
        compute_lgf_table(w, 200)
    assert err.value.min_eigenvalue < 1e-10
    table, hit = cached_lgf_table(w, 200, cache_dir=tmp_path)
    assert table.box_n == 201 and not hit
    assert stencil_residual(table) <= 1e-10


def test_quadrature_oracle_symmetry_and_stencil():
    w = 2.0
    assert abs(lgf_quadrature_oracle(w, 3, 1) - lgf_quadrature_oracle(w, 1, 3)) <= 1e-10
    idx = range(-2, 3)
    g = np.array([[lgf_quadrature_oracle(w, a, b) if abs(a) + abs(b) <= 2 else 0 for a in idx] for b in idx])
    # the 13 nodes with |m1| + |m2| <= 2 cover the stencils of the origin and its 4 neighbours
    res = StencilOperator(w)(g)
    delta = np.zeros((3, 3))
    delta[1, 1] = 1.0
    for (r, c) in ((1, 1), (0, 1), (2, 1), (1, 0), (1, 2)):
        assert abs(res[r, c] - delta[r, c]) <= 1e-6


def test_quadrature_oracle_reports_failure():
    with pytest.raises(QuadratureError):
        # one coarse level pair: extrapolation cannot settle at this offset
        lgf_quadrature_oracle(6.0, 20, 20, eps=5e-2, levels=3)


def test_exact_quadrature_against_oracle():
    m1 = np.array([0, 1, 5, 10, 20])
    for w in OMEGAS:
        q = lgf_quadrature(w, m1, m1)
        for i, a in enumerate(m1):
            for j, b in enumerate(m1):
                if a <= 10 and b <= 10:
                    assert abs(q[i, j] - lgf_quadrature_oracle(w, a, b)) <= 1e-10


def test_ring_solution():
    for n in (3, 5, 8, 64):
        assert ring_solution_check(n) <= 1e-15
    with pytest.raises(DomainError):
        ring_solution_check(2)


def test_ring_origin_arithmetic():
    u = lambda m1, m2: -0.25 * (-1) ** max(abs(m1), abs(m2))  # noqa: E731
    assert u(1, 0) + u(-1, 0) + u(0, 1) + u(0, -1) + 0 * u(0, 0) == 1.0


def test_hankel_ring_data_is_available():
    t = compute_lgf_table(0.01, 200, boundary="hankel")
    assert t.boundary == "hankel" and stencil_residual(t) <= 1e-10


def test_save_load_roundtrip(tmp_path):
    t = table_for(0.5, 256)
    p = save_table(t, tmp_path / "t.lgf")
    raw = p.read_bytes()
    magic, version, w, n = struct.unpack_from("<4sIdI", raw)
    assert (magic, version, w, n) == (b"LGF2", 1, 0.5, 256)
    assert len(raw) == 20 + 16 * 257 * 257
    back = load_table(p)
    assert back.omega2 == t.omega2 and np.array_equal(back.values, t.values)


def test_load_rejects_bad_files(tmp_path):
    p = save_table(table_for(0.5, 256), tmp_path / "t.lgf")
    raw = bytearray(p.read_bytes())
    bad = tmp_path / "bad.lgf"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        load_table(bad)
    bad.write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(ValueError, match="version"):
        load_table(bad)
    bad.write_bytes(raw[:-16])
    with pytest.raises(ValueError):
        load_table(bad)


def test_cache_hit(tmp_path, monkeypatch):
    monkeypatch.setenv("ULGF_CACHE_DIR", str(tmp_path))
    a, hit_a = cached_lgf_table(0.3, 200)
    b, hit_b = cached_lgf_table(0.3, 200)
    assert (hit_a, hit_b) == (False, True)
    assert np.array_equal(a.values, b.values)
    assert len(list(tmp_path.glob("*.lgf"))) == 1

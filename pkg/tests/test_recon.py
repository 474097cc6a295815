import time

import numpy as np
import pytest

from conftest import problem, table_for, wave
from ulgf.analytic import mie_scattered, mie_solution, plane_wave
from ulgf.bae import KernelKind, apply_kernel, solve_density
from ulgf.recon import (
    FieldGrid, Region, evaluate_field_direct, read_field_binary, read_field_csv, reconstruct_fft, total_field,
    write_field_binary, write_field_csv,
)

KINDS = [KernelKind.single(), KernelKind.double(), KernelKind.combined()]


def _density(name="circle", n=128, kind=KernelKind.single()):
    cut, table, closure = problem(name, n)
    dens, _ = solve_density(kind, table, cut, closure)
    return cut, table, dens.q


@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.name)
def test_fft_matches_direct_on_circle(kind):
    cut, table, q = _density(kind=kind)
    region = Region.centered(64)
    fast = reconstruct_fft(kind, table, cut, q, region)
    slow = evaluate_field_direct(kind, table, cut, q, region)
    assert not fast.notes
    assert np.abs(fast.values - slow.values).max() <= 1e-8
    assert np.array_equal(fast.mask, slow.mask)


@pytest.mark.parametrize("name", ["triangle", "rods"])
def test_fft_matches_direct_other_geometries(name, rng):
    cut, table, _ = problem(name, 128)
    q = rng.standard_normal(len(cut.gamma_minus)) + 1j * rng.standard_normal(len(cut.gamma_minus))
    for kind in KINDS:
        region = Region(-50, -40, 97, 81)
        diff = reconstruct_fft(kind, table, cut, q, region).values - evaluate_field_direct(
            kind, table, cut, q, region).values
        assert np.abs(diff).max() <= 1e-8 * max(1.0, np.abs(q).max())


def test_fft_region_without_sources():
    cut, table, q = _density()
    region = Region(24, -30, 30, 61)  # right of the circle: no gamma- or E node inside
    assert not region.contains(cut.gamma_minus).any() and not region.contains(cut.e_set).any()
    fast = reconstruct_fft(KernelKind.single(), table, cut, q, region)
    slow = evaluate_field_direct(KernelKind.single(), table, cut, q, region)
    assert np.abs(fast.values - slow.values).max() <= 1e-8


def test_single_interior_node_satisfies_stencil():
    cut, table, q = _density()
    region = Region(30, 2, 3, 3)
    f = reconstruct_fft(KernelKind.single(), table, cut, q, region).values
    ring = f[0, 1] + f[2, 1] + f[1, 0] + f[1, 2]
    assert abs(ring + (table.omega2 - 4.0) * f[1, 1]) <= 1e-12 * np.abs(f).max()
    direct = evaluate_field_direct(KernelKind.single(), table, cut, q, region).values
    assert abs(f[1, 1] - direct[1, 1]) <= 1e-10


def test_single_node_region_and_zero_density():
    cut, table, q = _density()
    node = np.array([[17, -5]])
    for kind in KINDS:
        one = reconstruct_fft(kind, table, cut, q, Region(17, -5, 1, 1))
        assert one.values.shape == (1, 1) and one.notes
        assert one.values[0, 0] == pytest.approx(apply_kernel(kind, table, cut, node, q)[0], abs=1e-15)
        zero = reconstruct_fft(kind, table, cut, np.zeros_like(q), Region.centered(20))
        assert np.all(zero.values == 0)


def test_resonant_region_falls_back(caplog):
    cut, _, _ = problem("circle", 128)
    omega2 = 4.0 - 2.0 * np.cos(np.pi / 4)  # eigenvalue of a 3x3 Dirichlet interior
    table = table_for(omega2, 200)
    q = np.linspace(0, 1, len(cut.gamma_minus)) + 0j
    region = Region(-2, -2, 5, 5)
    out = reconstruct_fft(KernelKind.single(), table, cut, q, region)
    assert any("resonance" in n for n in out.notes)
    ref = evaluate_field_direct(KernelKind.single(), table, cut, q, region)
    assert np.array_equal(out.values, ref.values)


def test_direct_field_matches_mie_at_second_order():
    sol = mie_solution(wave(), 0.5, "TM")
    errs = []
    for n in (64, 128):
        cut, table, q = _density(n=n)
        f = evaluate_field_direct(KernelKind.single(), table, cut, q, Region.centered(n // 2 - 2))
        xy = f.coords()
        r = np.hypot(xy[..., 0], xy[..., 1])
        ring = np.abs(r - 1.0) <= 0.05
        errs.append(np.abs(f.values[ring] - mie_scattered(sol, xy[ring])).max())
    assert errs[0] / errs[1] > 3.0


def test_total_field_mask_and_additivity():
    cut, table, q = _density()
    scat = reconstruct_fft(KernelKind.single(), table, cut, q, Region.centered(64))
    tot = total_field(scat, wave(), cut)
    inside = cut.shape.sdf(scat.coords()) <= 0
    assert tot.kind == "total" and np.array_equal(tot.mask, ~inside)
    assert np.all(tot.values[inside] == 0)
    inc = plane_wave(wave(), scat.coords())
    assert np.allclose(tot.values[~inside], scat.values[~inside] + inc[~inside], rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        total_field(tot, wave(), cut)


def test_total_field_vanishes_near_boundary_with_refinement():
    peaks = []
    for n in (64, 128, 256):
        cut, table, q = _density(n=n)
        gp = cut.gamma_plus
        f = evaluate_field_direct(KernelKind.single(), table, cut, q, Region.centered(n // 4))
        tot = total_field(f, wave(), cut)
        sel = tot.region.contains(gp)
        vals = tot.values[gp[sel, 1] - tot.region.n0, gp[sel, 0] - tot.region.m0]
        peaks.append(np.abs(vals).max())
    assert peaks[0] > peaks[1] > peaks[2]


def _sample_field(rng):
    region = Region(-3, 2, 5, 4)
    vals = rng.standard_normal(region.shape) + 1j * rng.standard_normal(region.shape)
    vals[0, 0] = 1e-300 + 1j * np.pi
    mask = rng.random(region.shape) > 0.3
    return FieldGrid(region, vals, 0.0125, (0.00625, -0.001), "total", mask)


def test_csv_round_trip(tmp_path, rng):
    f = _sample_field(rng)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    assert path.read_text().splitlines()[0] == "x,y,re,im,mask"
    xy, values, mask = read_field_csv(path)
    assert np.array_equal(values, f.values.reshape(-1))
    assert np.array_equal(mask, f.mask.reshape(-1))
    assert np.array_equal(xy, f.coords().reshape(-1, 2))
    # row-major: x runs fastest
    assert xy[1, 0] > xy[0, 0] and xy[1, 1] == xy[0, 1]


def test_binary_round_trip(tmp_path, rng):
    f = _sample_field(rng)
    path = tmp_path / "field.bin"
    write_field_binary(f, path)
    g = read_field_binary(path)
    assert g.region == f.region and g.h == f.h and g.origin == f.origin and g.kind == f.kind
    assert np.array_equal(g.values, f.values) and np.array_equal(g.mask, f.mask)
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(ValueError, match="truncated"):
        read_field_binary(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="not a field file"):
        read_field_binary(path)


def test_fieldgrid_validates_shape():
    with pytest.raises(ValueError):
        FieldGrid(Region(0, 0, 3, 2), np.zeros((3, 2), complex), 0.1, (0, 0))
    with pytest.raises(ValueError):
        Region(0, 0, 0, 4)


def test_fft_cost_scaling():
    """Doubling the region side costs between 3x and 6x once the transform dominates."""
    cut, table, q = _density()
    big = table_for(table.omega2, 600)

    def timed(half):
        region = Region.centered(half)
        reconstruct_fft(KernelKind.single(), big, cut, q, region)
        samples = []
        for _ in range(5):
            t0 = time.perf_counter()
            reconstruct_fft(KernelKind.single(), big, cut, q, region)
            samples.append(time.perf_counter() - t0)
        return float(np.median(samples))

    ratio = timed(256) / timed(128)
    assert 3.0 <= ratio <= 6.0, ratio

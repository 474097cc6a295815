"""Field reconstruction on a rectangular target region.

Two routes give the same values: direct convolution of the layer sources at
every region node, or direct convolution on the region's outer ring followed
by a fast sine transform solve of ``[A u] = rho`` for the interior.  ``rho``
is the lattice source pattern of the kernel (see :mod:`ulgf.bae`) restricted
to interior region nodes.
"""

import logging
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import _fst
from .analytic import plane_wave
from .bae import _convolve, source_pattern

logger = logging.getLogger(__name__)

__all__ = [
    "Region",
    "FieldGrid",
    "evaluate_field_direct",
    "reconstruct_fft",
    "total_field",
    "write_field_csv",
    "read_field_csv",
    "write_field_binary",
    "read_field_binary",
]

FIELD_MAGIC = b"FLD2"
FIELD_VERSION = 1
_FIELD_HEADER = struct.Struct("<4sIdiiIIddB")
_KINDS = ("scattered", "total")
RESONANCE_TOL = 1e-10


@dataclass(frozen=True)
class Region:
    """Lattice rectangle ``m0 <= m < m0 + nx``, ``n0 <= n < n0 + ny``."""

    m0: int
    n0: int
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("region must contain at least one node")

    @classmethod
    def centered(cls, half_x, half_y=None):
        half_y = half_x if half_y is None else half_y
        return cls(-half_x, -half_y, 2 * half_x + 1, 2 * half_y + 1)

    @classmethod
    def from_grid(cls, grid):
        return cls.centered(grid.extent[0], grid.extent[1])

    @property
    def shape(self):
        return (self.ny, self.nx)

    def indices(self):
        """``(ny, nx, 2)`` lattice indices, rows running over ``n``."""
        m = np.arange(self.m0, self.m0 + self.nx)
        n = np.arange(self.n0, self.n0 + self.ny)
        mm, nn = np.meshgrid(m, n)
        return np.stack([mm, nn], axis=-1)

    def contains(self, idx):
        idx = np.asarray(idx)
        return (
            (idx[..., 0] >= self.m0) & (idx[..., 0] < self.m0 + self.nx)
            & (idx[..., 1] >= self.n0) & (idx[..., 1] < self.n0 + self.ny)
        )


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Complex field on a :class:`Region`; ``mask`` is True on exterior (valid) nodes."""

    region: Region
    values: np.ndarray
    h: float
    origin: tuple
    kind: str = "scattered"
    mask: np.ndarray = None
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.values.shape != self.region.shape:
            raise ValueError(f"values shape {self.values.shape} does not match region {self.region.shape}")
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.mask is None:
            object.__setattr__(self, "mask", np.ones(self.region.shape, dtype=bool))

    def coords(self):
        """``(ny, nx, 2)`` physical coordinates."""
        return np.asarray(self.origin) + self.h * self.region.indices()


def _exterior_mask(cut, region):
    pts = cut.grid.coords(region.indices())
    return cut.shape.sdf(pts) > 0


def _make(cut, region, values, notes=()):
    return FieldGrid(region, values, cut.grid.h, tuple(cut.grid.origin), "scattered",
                     _exterior_mask(cut, region), tuple(notes))


def evaluate_field_direct(kind, table, cut, q, region):
    """Layer potential at every region node by dense convolution."""
    pattern = source_pattern(kind, cut, table.omega2)
    idx = region.indices().reshape(-1, 2)
    vals = _convolve(table, idx, pattern.nodes, pattern.matrix @ np.asarray(q, dtype=complex))
    return _make(cut, region, vals.reshape(region.shape))


def reconstruct_fft(kind, table, cut, q, region):
    """Layer potential on the region via ring convolution plus an interior sine-transform solve.

    Falls back to :func:`evaluate_field_direct` (noted in ``FieldGrid.notes``)
    when ``omega2`` sits within ``1e-10`` of a Dirichlet eigenvalue of the
    region, or when the region has no interior.
    """
    ny, nx = region.shape
    if nx < 3 or ny < 3:
        out = evaluate_field_direct(kind, table, cut, q, region)
        return replace(out, notes=out.notes + ("no interior; direct evaluation",))
    lam = _fst.dirichlet_eigenvalues(nx - 2, ny - 2, table.omega2)
    lam_min = float(np.abs(lam).min())
    if lam_min < RESONANCE_TOL:
        logger.warning("region resonant (min |lambda| = %.1e); using direct evaluation", lam_min)
        out = evaluate_field_direct(kind, table, cut, q, region)
        return replace(out, notes=out.notes + (f"resonance fallback (min |lambda| = {lam_min:.1e})",))

    pattern = source_pattern(kind, cut, table.omega2)
    rho = pattern.matrix @ np.asarray(q, dtype=complex)
    idx = region.indices()
    ring = np.ones(region.shape, dtype=bool)
    ring[1:-1, 1:-1] = False
    values = np.zeros(region.shape, dtype=complex)
    values[ring] = _convolve(table, idx[ring], pattern.nodes, rho)

    rhs = _fst.lift_boundary(values)
    inner = Region(region.m0 + 1, region.n0 + 1, nx - 2, ny - 2)
    sel = inner.contains(pattern.nodes)
    if np.any(sel):
        src = pattern.nodes[sel]
        np.add.at(rhs, (src[:, 1] - inner.n0, src[:, 0] - inner.m0), rho[sel])
    values[1:-1, 1:-1] = _fst.solve_dirichlet(rhs, table.omega2, lam)
    return _make(cut, region, values)


def total_field(field_grid, wave, cut):
    """Add the incident wave on exterior nodes; interior nodes are zero and masked out."""
    if field_grid.kind != "scattered":
        raise ValueError("total_field expects a scattered field")
    mask = _exterior_mask(cut, field_grid.region)
    inc = plane_wave(wave, field_grid.coords())
    values = np.where(mask, field_grid.values + inc, 0.0 + 0.0j)
    return replace(field_grid, values=values, kind="total", mask=mask)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_field_csv(field_grid, path):
    """CSV with header ``x,y,re,im,mask``; rows ordered by ``y`` then ``x``."""
    xy = field_grid.coords().reshape(-1, 2)
    v = field_grid.values.reshape(-1)
    data = np.column_stack([xy, v.real, v.imag, field_grid.mask.reshape(-1).astype(float)])
    np.savetxt(path, data, delimiter=",", header="x,y,re,im,mask", comments="",
               fmt=["%.17g", "%.17g", "%.17g", "%.17g", "%d"])


def read_field_csv(path):
    """Return ``(xy, values, mask)`` flattened in file order."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :2], data[:, 2] + 1j * data[:, 3], data[:, 4].astype(bool)


def write_field_binary(field_grid, path):
    """Little-endian: header ``<4sIdiiIIddB`` then complex128 values and uint8 mask, row-major."""
    r = field_grid.region
    header = _FIELD_HEADER.pack(FIELD_MAGIC, FIELD_VERSION, field_grid.h, r.m0, r.n0, r.nx, r.ny,
                                field_grid.origin[0], field_grid.origin[1], _KINDS.index(field_grid.kind))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field_grid.values, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(field_grid.mask, dtype=np.uint8).tobytes())


def read_field_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, h, m0, n0, nx, ny, ox, oy, kind = _FIELD_HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC or version != FIELD_VERSION:
        raise ValueError(f"{path}: not a field file (magic {magic!r}, version {version})")
    off = _FIELD_HEADER.size
    n = nx * ny
    if len(raw) != off + 17 * n:
        raise ValueError(f"{path}: truncated field file")
    values = np.frombuffer(raw, dtype="<c16", count=n, offset=off).reshape(ny, nx).copy()
    mask = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off + 16 * n).reshape(ny, nx).astype(bool)
    return FieldGrid(Region(m0, n0, nx, ny), values, h, (ox, oy), _KINDS[kind], mask)

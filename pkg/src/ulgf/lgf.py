"""Lattice Green's function of the 5-point difference Helmholtz operator.

The operator acting on a grid function ``u`` is::

    [A u](m1, m2) = u(m1+1, m2) + u(m1-1, m2) + u(m1, m2+1) + u(m1, m2-1)
                    + (omega2 - 4) u(m1, m2)

with ``omega2 = (k h)**2``.  The outgoing Green's function ``G`` solves
``A G = delta_0`` on the infinite lattice; it is even in each index and
symmetric under ``m1 <-> m2``.

Tables are produced by a Dirichlet box solve with fast sine transforms
(:func:`compute_lgf_table`).  Two sources of box data are supported:

``"lattice"`` (default)
    exact lattice values on the ring ``|m| = box_n + 1`` from the
    one-dimensional residue reduction of the Fourier integral
    (:func:`lgf_quadrature`); the box solve then reproduces ``G`` to
    quadrature accuracy everywhere inside.
``"hankel"``
    the continuous outgoing fundamental solution ``-(i/4) H0(omega r)``.
    Cheap, but the lattice's dispersion differs from the continuum, so the
    result is only a rough approximation unless ``omega2`` is tiny.

Cache file layout (little-endian)::

    offset  size  field
    0       4     magic b"LGF2"
    4       4     u32 format version (1)
    8       8     f64 omega2
    16      4     u32 box_n
    20      ...   complex128 values, (box_n+1) x (box_n+1), row-major, [m1, m2]
"""

import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

from . import _fst
from .errors import DomainError, LgfRangeError, QuadratureError, ResonanceError

logger = logging.getLogger(__name__)

__all__ = [
    "StencilOperator",
    "LgfTable",
    "compute_lgf_table",
    "lgf_at",
    "lgf_quadrature",
    "lgf_quadrature_oracle",
    "ring_solution_check",
    "stencil_residual",
    "save_table",
    "load_table",
    "cached_lgf_table",
    "CACHE_ENV",
]

MIN_BOX_N = 200
RESONANCE_TOL = 1e-10
CACHE_ENV = "ULGF_CACHE_DIR"
_MAGIC = b"LGF2"
_VERSION = 1
_HEADER = struct.Struct("<4sIdI")


@dataclass(frozen=True)
class StencilOperator:
    """The 5-point difference Helmholtz operator for a fixed ``omega2``."""

    omega2: float

    def __post_init__(self):
        if not self.omega2 > 0:
            raise DomainError(f"omega2 must be positive, got {self.omega2}")

    def apply(self, u):
        """Apply to a 2D array; returns values on the nodes with full stencils.

        The result has shape ``(u.shape[0] - 2, u.shape[1] - 2)``.
        """
        u = np.asarray(u)
        return (
            u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
            + (self.omega2 - 4.0) * u[1:-1, 1:-1]
        )

    __call__ = apply


@dataclass(frozen=True, eq=False)
class LgfTable:
    """Quadrant ``values[m1, m2] = G(m1, m2)`` for ``0 <= m1, m2 <= box_n``."""

    omega2: float
    box_n: int
    values: np.ndarray
    boundary: str = "lattice"

    def __post_init__(self):
        n = self.box_n + 1
        if self.values.shape != (n, n):
            raise ValueError(f"table values must have shape {(n, n)}, got {self.values.shape}")
        self.values.setflags(write=False)

    def __call__(self, m1, m2):
        return lgf_at(self, m1, m2)

    def full(self, radius=None):
        """Unfold the quadrant onto ``[-radius, radius]**2`` (rows index ``m2``)."""
        r = self.box_n if radius is None else int(radius)
        idx = np.abs(np.arange(-r, r + 1))
        return self.values[np.ix_(idx, idx)].T.copy()


def lgf_at(table, m1, m2):
    """``G(|m1|, |m2|)`` read from ``table``; accepts scalars or integer arrays."""
    a1 = np.abs(np.asarray(m1, dtype=np.int64))
    a2 = np.abs(np.asarray(m2, dtype=np.int64))
    reach = int(max(a1.max(initial=0), a2.max(initial=0)))
    if reach > table.box_n:
        raise LgfRangeError(
            f"lattice offset {reach} exceeds the table (box_n={table.box_n}); "
            f"a table with box_n >= {reach} is required",
            required_box_n=reach,
        )
    out = table.values[a1, a2]
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# One-dimensional reduction of the Fourier integral
# ---------------------------------------------------------------------------
#
# For fixed xi1 the inner integral is done by residues:
#     (1/2pi) int e^{i m xi} / (2 cos xi + c) dxi = beta^|m| / (beta - 1/beta)
# where beta is the root of beta + 1/beta + c = 0 inside the unit circle, or,
# on |c| < 2, the unit-modulus root with Im(beta) > 0 (outgoing limit).
# The remaining xi1 integrand has inverse square-root singularities where
# c = +-2; a cosine substitution on each sub-interval removes them.


def _subintervals(omega2):
    """Sub-intervals of [0, pi] split where ``c(xi) = -2`` or ``c(xi) = +2``."""
    levels = {}
    for level in ((2.0 - omega2) / 2.0, (6.0 - omega2) / 2.0):
        if -1.0 < level < 1.0:
            levels[math.acos(level)] = level
    pts = sorted([0.0, math.pi, *levels])
    return list(zip(pts[:-1], pts[1:])), levels


def _cos_minus(level, xi, a, ta, b, tb, levels):
    """``cos(xi) - level`` without cancellation near breakpoints at ``level``."""
    if levels.get(a) == level:
        return -2.0 * np.sin(0.5 * (xi + a)) * np.sin(0.5 * ta)
    if levels.get(b) == level:
        return 2.0 * np.sin(0.5 * (xi + b)) * np.sin(0.5 * tb)
    return np.cos(xi) - level


def _residue_factor(omega2, xi, a, ta, b, tb, levels, m2):
    """``beta**|m2| / (beta - 1/beta)`` on nodes ``xi``; shape ``(len(m2), len(xi))``."""
    c_plus_2 = 2.0 * _cos_minus((2.0 - omega2) / 2.0, xi, a, ta, b, tb, levels)
    c_minus_2 = 2.0 * _cos_minus((6.0 - omega2) / 2.0, xi, a, ta, b, tb, levels)
    c = omega2 - 4.0 + 2.0 * np.cos(xi)
    disc = c_plus_2 * c_minus_2  # c**2 - 4
    sq = np.sqrt(np.abs(disc))
    m2 = np.abs(np.asarray(m2))[:, None]
    if disc[0] < 0:  # propagating: |beta| = 1
        theta = np.arctan2(sq, -c)
        return np.exp(1j * m2 * theta) * (-1j / sq)
    if c[0] < 0:
        beta, denom = 2.0 / (sq - c), -sq
    else:
        beta, denom = -2.0 / (c + sq), sq
    return (beta**m2) / denom + 0j


def lgf_quadrature(omega2, m1, m2, nodes=None):
    """Outgoing lattice Green's function by quadrature, outer-product form.

    Returns ``G[i, j] = G(m1[i], m2[j])`` evaluated directly at zero
    absorption.  Gauss-Legendre with a cosine substitution on each smooth
    sub-interval; accuracy is ~1e-12 for offsets up to a few hundred.
    """
    omega2 = float(omega2)
    if not omega2 > 0 or omega2 in (4.0, 8.0):
        raise DomainError(f"quadrature needs omega2 > 0 and omega2 not in {{4, 8}}, got {omega2}")
    m1 = np.atleast_1d(np.asarray(m1, dtype=np.int64))
    m2 = np.atleast_1d(np.asarray(m2, dtype=np.int64))
    if nodes is None:
        nodes = 96 + 2 * int(np.abs(m1).max() + np.abs(m2).max())
    s, w = leggauss(nodes)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    intervals, levels = _subintervals(omega2)
    total = np.zeros((m1.size, m2.size), dtype=complex)
    for a, b in intervals:
        ta = (b - a) * np.sin(0.5 * np.pi * s) ** 2
        tb = (b - a) * np.cos(0.5 * np.pi * s) ** 2
        xi = np.where(s < 0.5, a + ta, b - tb)
        jac = 0.5 * np.pi * (b - a) * np.sin(np.pi * s)
        F = _residue_factor(omega2, xi, a, ta, b, tb, levels, m2)
        C = np.cos(np.outer(m1, xi)) * (w * jac)
        total += C @ F.T
    return total / np.pi


def _absorbing_value(omega2, m1, m2, eps, interior_points):
    w2 = omega2 * (1.0 + 1j * eps) ** 2
    p = abs(int(m2))

    def integrand(xi):
        c = w2 - 4.0 + 2.0 * math.cos(xi)
        d = np.sqrt(c * c - 4.0)
        b1, b2 = 0.5 * (-c + d), 0.5 * (-c - d)
        beta = b1 if abs(b1) < abs(b2) else b2
        return math.cos(m1 * xi) * beta**p / (beta - 1.0 / beta)

    val, _ = integrate.quad(
        integrand, 0.0, math.pi, points=interior_points or None,
        limit=1000, epsabs=1e-14, epsrel=1e-13, complex_func=True,
    )
    return val / math.pi


def lgf_quadrature_oracle(omega2, m1, m2, eps=1e-3, levels=6):
    """Independent limiting-absorption evaluation of ``G(m1, m2)``.

    The wavenumber is given a small positive imaginary part, ``omega2 ->
    omega2 (1 + i eps)**2``; the inner integral is done by residues and the
    outer one by adaptive quadrature.  Values at ``eps, eps/2, ...`` are
    Richardson-extrapolated to ``eps -> 0+``.

    Raises
    ------
    QuadratureError
        if the fully extrapolated values from the finest ``levels`` and
        ``levels - 1`` eps values differ by more than 1e-7.
    """
    omega2 = float(omega2)
    if not omega2 > 0:
        raise DomainError(f"omega2 must be positive, got {omega2}")
    if levels < 3:
        raise ValueError("Richardson extrapolation needs at least three eps levels")
    _, lv = _subintervals(omega2)
    pts = sorted(lv)
    T = [[_absorbing_value(omega2, m1, m2, eps / 2**i, pts)] for i in range(levels)]
    for i in range(1, levels):
        for j in range(1, i + 1):
            T[i].append(T[i][j - 1] + (T[i][j - 1] - T[i - 1][j - 1]) / (2**j - 1))
    spread = abs(T[-1][-1] - T[-2][-2])
    if spread > 1e-7:
        raise QuadratureError(
            f"limiting-absorption extrapolation did not settle (spread {spread:.2e}) "
            f"at omega2={omega2}, m=({m1}, {m2})"
        )
    return complex(T[-1][-1])


# ---------------------------------------------------------------------------
# Box solve
# ---------------------------------------------------------------------------


def compute_lgf_table(omega2, box_n, boundary="lattice"):
    """Tabulate ``G`` on ``0 <= m1, m2 <= box_n`` by a Dirichlet box solve.

    Solves ``A u = delta_0`` on ``[-box_n, box_n]**2`` with ``u`` prescribed on
    the ring ``max(|m1|, |m2|) = box_n + 1`` (see the module docstring for the
    two kinds of ring data), using a 2D type-I sine transform.

    Raises
    ------
    ResonanceError
        if a Dirichlet eigenvalue of the box is below 1e-10 in magnitude;
        retry with ``box_n + 1``.
    """
    omega2 = float(omega2)
    box_n = int(box_n)
    if not omega2 > 0:
        raise DomainError(f"omega2 must be positive, got {omega2}")
    if omega2 == 4.0:
        raise DomainError(
            "omega2 = 4 is singular for the lattice symbol; nudge h so that (k h)**2 != 4"
        )
    if box_n < MIN_BOX_N:
        raise DomainError(f"box_n must be >= {MIN_BOX_N}, got {box_n}")
    if boundary not in ("lattice", "hankel"):
        raise ValueError(f"unknown boundary data {boundary!r}")
    size = 2 * box_n + 1
    lam = _fst.dirichlet_eigenvalues(size, size, omega2)
    lam_min = float(np.abs(lam).min())
    if lam_min < RESONANCE_TOL:
        raise ResonanceError(
            f"box with box_n={box_n} is resonant at omega2={omega2} "
            f"(min |eigenvalue| = {lam_min:.2e}); retry with box_n={box_n + 1}",
            min_eigenvalue=lam_min,
        )
    ring = box_n + 1
    j = np.arange(-box_n, box_n + 1)
    if boundary == "hankel":
        data = -0.25j * special.hankel1(0, math.sqrt(omega2) * np.sqrt(ring**2 + j**2))
    else:
        data = lgf_quadrature(omega2, [ring], np.arange(box_n + 1))[0][np.abs(j)]
    rhs = np.zeros((size, size), dtype=complex)
    rhs[box_n, box_n] = 1.0
    rhs[0, :] -= data
    rhs[-1, :] -= data
    rhs[:, 0] -= data
    rhs[:, -1] -= data
    u = _fst.solve_dirichlet(rhs, omega2, lam)
    quad = u[box_n:, box_n:]
    quad = 0.5 * (quad + quad.T)
    logger.debug("LGF table omega2=%g box_n=%d (%s ring data)", omega2, box_n, boundary)
    return LgfTable(omega2=omega2, box_n=box_n, values=np.ascontiguousarray(quad), boundary=boundary)


def stencil_residual(table):
    """``max |A G - delta_0|`` over all nodes of the table with full stencils."""
    full = table.full()
    res = StencilOperator(table.omega2).apply(full)
    c = table.box_n - 1
    res[c, c] -= 1.0
    return float(np.abs(res).max())


def ring_solution_check(box_n):
    """Residual of the alternating-ring particular solution at ``omega2 = 4``.

    ``u(m) = -(1/4) (-1)**max(|m1|, |m2|)`` satisfies ``A u = delta_0`` exactly
    when ``omega2 = 4``; returns ``max |A u - delta_0|`` on full-stencil nodes.
    """
    box_n = int(box_n)
    if box_n < 3:
        raise DomainError("ring check needs box_n >= 3")
    idx = np.abs(np.arange(-box_n, box_n + 1))
    cheb = np.maximum(idx[:, None], idx[None, :])
    u = -0.25 * np.where(cheb % 2 == 0, 1.0, -1.0)
    res = StencilOperator(4.0).apply(u)
    res[box_n - 1, box_n - 1] -= 1.0
    return float(np.abs(res).max())


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_table(table, path):
    """Write ``table`` atomically (temporary file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(_MAGIC, _VERSION, float(table.omega2), int(table.box_n))
    payload = np.ascontiguousarray(table.values, dtype="<c16").tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".lgf-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_table(path, boundary="lattice"):
    """Read a table written by :func:`save_table`, validating magic and version."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated LGF table header")
    magic, version, omega2, box_n = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported LGF table version {version}")
    n = box_n + 1
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if data.size != n * n:
        raise ValueError(f"{path}: payload has {data.size} values, expected {n * n}")
    return LgfTable(omega2=omega2, box_n=box_n, values=data.reshape(n, n).astype(complex), boundary=boundary)


def _cache_path(cache_dir, omega2, box_n, boundary):
    return Path(cache_dir) / f"lgf-{boundary}-{float(omega2).hex()}-{int(box_n)}.lgf"


def cached_lgf_table(omega2, box_n, cache_dir=None, boundary="lattice", retries=3):
    """Load or compute (and store) a table; returns ``(table, cache_hit)``.

    ``cache_dir`` defaults to the ``ULGF_CACHE_DIR`` environment variable; with
    neither set nothing is persisted.  Resonant boxes are retried with
    ``box_n + 1`` up to ``retries`` times.
    """
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    last = None
    for bump in range(retries + 1):
        n = int(box_n) + bump
        if cache_dir:
            path = _cache_path(cache_dir, omega2, n, boundary)
            if path.exists():
                return load_table(path, boundary=boundary), True
        try:
            table = compute_lgf_table(omega2, n, boundary=boundary)
        except ResonanceError as exc:
            logger.warning("%s", exc)
            last = exc
            continue
        if cache_dir:
            save_table(table, path)
        return table, False
    raise last

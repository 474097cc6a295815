"""Implicit scatterer shapes, lattice point sets and cut cells.

Lattice node ``(m, n)`` sits at ``origin + (m h, n h)``.  Point sets:

* ``M-`` nodes strictly inside the scatterer, ``M+`` the rest;
* ``gamma-`` nodes of ``M-`` with a 5-point neighbour in ``M+``;
* ``gamma+`` nodes of ``M+`` with a 5-point neighbour in ``M-``;
* ``E`` 5-point neighbours of ``gamma-`` not in ``gamma = gamma- | gamma+``.

Every ``gamma-`` node owns one boundary crossing (the closest along its grid
lines) and one 3x3 patch used for the boundary closure.  Patch nodes not in
``gamma`` form ``zeta``; ``gamma+~ = gamma+ | zeta``.

All index lists are ``(K, 2)`` integer arrays of ``(m, n)`` in lexicographic
order.
"""

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateNodeError, GeometryError

logger = logging.getLogger(__name__)

__all__ = [
    "Circle",
    "Polygon",
    "Capsule",
    "Union",
    "shape_from_dict",
    "signed_distance",
    "GridSpec",
    "PointSets",
    "CutGeometry",
    "ThinGeometryWarning",
    "classify_points",
    "find_intersection",
    "find_intersections",
    "build_cut_cells",
    "cut_geometry",
    "count_components",
    "covering_extent",
    "dump_point_sets",
]

DEGENERATE_TOL = 1e-12  # relative to h
_STEPS = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)])  # scan order +x, -x, +y, -y


class ThinGeometryWarning(UserWarning):
    """A cut-cell patch reaches deep into the scatterer."""


def _pts(p):
    return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class Circle:
    center: tuple
    radius: float

    def sdf(self, p):
        p = _pts(p)
        return np.hypot(p[..., 0] - self.center[0], p[..., 1] - self.center[1]) - self.radius

    def bounds(self):
        """``(xmin, ymin, xmax, ymax)``."""
        cx, cy = self.center
        return (cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius)

    def to_dict(self):
        return {"type": "circle", "center": list(self.center), "radius": self.radius}


def _segment_distance(p, a, b):
    ab = np.subtract(b, a)
    ap = p - np.asarray(a)
    t = np.clip((ap @ ab) / (ab @ ab), 0.0, 1.0)
    d = ap - t[..., None] * ab
    return np.hypot(d[..., 0], d[..., 1])


@dataclass(frozen=True)
class Polygon:
    """Simple polygon; stored counterclockwise (clockwise input is reversed)."""

    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs at least three 2D vertices")
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area == 0:
            raise GeometryError("degenerate polygon")
        if area < 0:
            object.__setattr__(self, "vertices", tuple(tuple(map(float, p)) for p in v[::-1]))

    def sdf(self, p):
        p = _pts(p)
        v = np.asarray(self.vertices, dtype=float)
        dist = np.full(p.shape[:-1], np.inf)
        winding = np.zeros(p.shape[:-1], dtype=int)
        x, y = p[..., 0], p[..., 1]
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            dist = np.minimum(dist, _segment_distance(p, a, b))
            cross = (b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])
            up = (a[1] <= y) & (b[1] > y) & (cross > 0)
            down = (a[1] > y) & (b[1] <= y) & (cross < 0)
            winding += up.astype(int) - down.astype(int)
        return np.where(winding != 0, -dist, dist)

    def bounds(self):
        v = np.asarray(self.vertices)
        return (*v.min(axis=0), *v.max(axis=0))

    def to_dict(self):
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class Capsule:
    """Stadium: all points within ``radius`` of the segment ``a``-``b``."""

    a: tuple
    b: tuple
    radius: float

    def sdf(self, p):
        return _segment_distance(_pts(p), self.a, self.b) - self.radius

    def bounds(self):
        r = self.radius
        return (min(self.a[0], self.b[0]) - r, min(self.a[1], self.b[1]) - r,
                max(self.a[0], self.b[0]) + r, max(self.a[1], self.b[1]) + r)

    def to_dict(self):
        return {"type": "capsule", "a": list(self.a), "b": list(self.b), "radius": self.radius}


@dataclass(frozen=True)
class Union:
    members: tuple

    def sdf(self, p):
        return np.min([s.sdf(p) for s in self.members], axis=0)

    def bounds(self):
        b = np.array([s.bounds() for s in self.members])
        return (*b[:, :2].min(axis=0), *b[:, 2:].max(axis=0))

    def to_dict(self):
        return {"type": "union", "members": [s.to_dict() for s in self.members]}


_SHAPE_FIELDS = {
    "circle": ({"radius"}, {"center"}),
    "polygon": ({"vertices"}, set()),
    "capsule": ({"a", "b", "radius"}, set()),
    "union": ({"members"}, set()),
}


def shape_from_dict(spec):
    """Build a shape from its JSON form (see :meth:`to_dict` of each shape)."""
    kind = spec.get("type")
    if kind not in _SHAPE_FIELDS:
        raise GeometryError(f"unknown shape type {kind!r}")
    required, optional = _SHAPE_FIELDS[kind]
    keys = set(spec) - {"type"}
    if required - keys:
        raise GeometryError(f"{kind} shape is missing fields {sorted(required - keys)}")
    if keys - required - optional:
        raise GeometryError(f"unknown {kind} fields: {sorted(keys - required - optional)}")
    if kind == "circle":
        return Circle(tuple(map(float, spec.get("center", (0.0, 0.0)))), float(spec["radius"]))
    if kind == "polygon":
        return Polygon(tuple(tuple(map(float, v)) for v in spec["vertices"]))
    if kind == "capsule":
        return Capsule(tuple(map(float, spec["a"])), tuple(map(float, spec["b"])), float(spec["radius"]))
    return Union(tuple(shape_from_dict(m) for m in spec["members"]))


def signed_distance(shape, p):
    """Signed distance: negative inside, positive outside, zero on the boundary."""
    d = shape.sdf(p)
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class GridSpec:
    """Lattice with spacing ``h``; nodes ``(m, n)``, ``|m| <= extent[0]``, ``|n| <= extent[1]``."""

    h: float
    origin: tuple = (0.0, 0.0)
    extent: tuple = (64, 64)

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryError("grid spacing must be positive")

    @property
    def shape(self):
        """Array shape ``(ny, nx)`` of grid-sized masks; row index is ``n``."""
        return (2 * self.extent[1] + 1, 2 * self.extent[0] + 1)

    def coords(self, idx):
        idx = np.asarray(idx)
        return np.asarray(self.origin) + self.h * idx

    def node_grid(self):
        """``(m, n)`` index arrays of every node, each of shape :attr:`shape`."""
        m = np.arange(-self.extent[0], self.extent[0] + 1)
        n = np.arange(-self.extent[1], self.extent[1] + 1)
        return np.meshgrid(m, n)

    def contains(self, idx):
        idx = np.asarray(idx)
        return (np.abs(idx[..., 0]) <= self.extent[0]) & (np.abs(idx[..., 1]) <= self.extent[1])

    def shifted(self, dx, dy):
        return GridSpec(self.h, (self.origin[0] + dx, self.origin[1] + dy), self.extent)


@dataclass(frozen=True, eq=False)
class PointSets:
    """Classified lattice points; masks have the grid's :attr:`GridSpec.shape`."""

    grid: GridSpec
    sdf: np.ndarray
    inside: np.ndarray
    gamma_minus: np.ndarray
    gamma_plus: np.ndarray
    e_set: np.ndarray

    @property
    def outside(self):
        return ~self.inside

    def mask_of(self, idx):
        """Row/column tuple addressing grid-sized masks at lattice indices ``idx``."""
        idx = np.asarray(idx)
        return idx[..., 1] + self.grid.extent[1], idx[..., 0] + self.grid.extent[0]


def _lex(idx):
    idx = np.asarray(idx, dtype=np.int64).reshape(-1, 2)
    return idx[np.lexsort((idx[:, 1], idx[:, 0]))]


def _mask_to_idx(mask, grid):
    rows, cols = np.nonzero(mask)
    return _lex(np.column_stack([cols - grid.extent[0], rows - grid.extent[1]]))


def _neighbour_any(mask):
    """True where at least one 5-point neighbour is set; off-grid counts as unset."""
    out = np.zeros_like(mask)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def classify_points(shape, grid):
    """Split the grid into ``M-``/``M+`` and build ``gamma-``, ``gamma+`` and ``E``.

    Raises
    ------
    DegenerateNodeError
        if a node lies within ``1e-12 h`` of the boundary.  Shift the grid
        origin by ``1e-6 h`` and retry (:func:`cut_geometry` does this).
    GeometryError
        if the discrete boundary touches the edge of the grid.
    """
    m, n = grid.node_grid()
    sdf = shape.sdf(np.stack([grid.origin[0] + grid.h * m, grid.origin[1] + grid.h * n], axis=-1))
    if np.any(np.abs(sdf) < DEGENERATE_TOL * grid.h):
        raise DegenerateNodeError(
            "a lattice node lies on the scatterer boundary; shift the grid origin by ~1e-6 h"
        )
    inside = sdf < 0
    g_minus = inside & _neighbour_any(~inside)
    g_plus = ~inside & _neighbour_any(inside)
    e_mask = _neighbour_any(g_minus) & inside & ~g_minus
    border = np.zeros_like(inside)
    border[:2, :] = border[-2:, :] = border[:, :2] = border[:, -2:] = True
    if np.any((g_minus | g_plus | inside) & border):
        raise GeometryError("scatterer reaches the edge of the grid; enlarge the grid extent")
    return PointSets(
        grid=grid,
        sdf=sdf,
        inside=inside,
        gamma_minus=_mask_to_idx(g_minus, grid),
        gamma_plus=_mask_to_idx(g_plus, grid),
        e_set=_mask_to_idx(e_mask, grid),
    )


def _gradient(shape, pts, step):
    ex = np.array([step, 0.0])
    ey = np.array([0.0, step])
    g = np.stack([shape.sdf(pts + ex) - shape.sdf(pts - ex), shape.sdf(pts + ey) - shape.sdf(pts - ey)], axis=-1)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def find_intersections(owners, shape, grid, sets):
    """Boundary crossings for many ``gamma-`` owners at once.

    For each owner the segments to its ``M+`` neighbours (scan order ``+x,
    -x, +y, -y``) are bisected on the signed distance; the crossing closest
    to the owner wins.  Returns ``(points, normals, directions)`` with
    ``directions`` indexing the scan order.
    """
    owners = np.asarray(owners, dtype=np.int64).reshape(-1, 2)
    K = len(owners)
    t_best = np.full(K, np.inf)
    pts_best = np.zeros((K, 2))
    dir_best = np.full(K, -1)
    p0 = grid.coords(owners)
    tol = DEGENERATE_TOL * grid.h
    for d, step in enumerate(_STEPS):
        nb = owners + step
        sel = sets.outside[sets.mask_of(nb)]
        if not sel.any():
            continue
        a, b = p0[sel], grid.coords(nb[sel])
        lo, hi = np.zeros(len(a)), np.ones(len(a))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            f = shape.sdf(a + mid[:, None] * (b - a))
            neg = f < 0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
            if np.all(hi - lo <= 1e-17):
                break
        f_lo = np.abs(shape.sdf(a + lo[:, None] * (b - a)))
        f_hi = np.abs(shape.sdf(a + hi[:, None] * (b - a)))
        t = np.where(f_lo <= f_hi, lo, hi)
        if np.any(np.minimum(f_lo, f_hi) > tol):
            logger.debug("bisection stopped above tolerance: %g", np.minimum(f_lo, f_hi).max())
        better = t < t_best[sel]
        ids = np.flatnonzero(sel)[better]
        t_best[ids] = t[better]
        pts_best[ids] = a[better] + t[better][:, None] * (b[better] - a[better])
        dir_best[ids] = d
    if np.any(dir_best < 0):
        raise GeometryError("gamma- node without an exterior neighbour")
    normals = _gradient(shape, pts_best, 1e-6 * grid.h)
    return pts_best, normals, dir_best


def find_intersection(owner, shape, grid, sets=None):
    """Crossing, outward normal and direction tag for a single ``gamma-`` node."""
    sets = classify_points(shape, grid) if sets is None else sets
    p, nrm, d = find_intersections([owner], shape, grid, sets)
    return p[0], nrm[0], int(d[0])


@dataclass(frozen=True, eq=False)
class CutGeometry:
    """Point sets plus per-owner crossings, normals and 3x3 closure patches.

    ``patches[i]`` lists the nine lattice nodes of owner ``i``'s patch with
    ``x`` varying fastest; ``patch_corner[i]`` is its lower-left node.
    """

    shape: object
    grid: GridSpec
    sets: PointSets
    points: np.ndarray
    normals: np.ndarray
    directions: np.ndarray
    patch_corner: np.ndarray
    zeta: np.ndarray
    gamma_plus_aug: np.ndarray
    _lookup: dict = field(default_factory=dict, repr=False)

    @property
    def gamma_minus(self):
        return self.sets.gamma_minus

    @property
    def gamma_plus(self):
        return self.sets.gamma_plus

    @property
    def e_set(self):
        return self.sets.e_set

    @property
    def patches(self):
        off = np.array([(i, j) for j in range(3) for i in range(3)])
        return self.patch_corner[:, None, :] + off[None, :, :]

    def index_of(self, which, idx):
        """Positions of lattice nodes ``idx`` in ``gamma_minus``/``gamma_plus_aug``/``e_set``; -1 if absent."""
        table = self._lookup[which]
        idx = np.asarray(idx, dtype=np.int64)
        shape = idx.shape[:-1]
        flat = idx.reshape(-1, 2)
        out = np.array([table.get((int(a), int(b)), -1) for a, b in flat], dtype=np.int64)
        return out.reshape(shape)

    def e_neighbours(self):
        """For each ``gamma-`` node, the indices into :attr:`e_set` of its 5-point neighbours in ``E``."""
        out = []
        for t in self.gamma_minus:
            ids = self.index_of("e_set", t[None, :] + _STEPS)
            out.append(ids[ids >= 0])
        return out


def _select_patches(cut_pts, normals, owners, directions, sets, grid):
    """Pick the 3x3 patch with most ``M+`` nodes for every owner."""
    K = len(owners)
    nb = owners + _STEPS[directions]
    lo = np.minimum(owners, nb)
    horizontal = directions < 2
    cands = []
    for d_along in (-1, 0):
        for d_across in (-2, -1, 0):
            corner = np.where(
                horizontal[:, None],
                np.column_stack([lo[:, 0] + d_along, owners[:, 1] + d_across]),
                np.column_stack([owners[:, 0] + d_across, lo[:, 1] + d_along]),
            )
            cands.append(corner)
    cands = np.stack(cands, axis=1)  # (K, 6, 2)
    off = np.array([(i, j) for j in range(3) for i in range(3)])
    nodes = cands[:, :, None, :] + off[None, None, :, :]  # (K, 6, 9, 2)
    if not np.all(grid.contains(nodes)):
        raise GeometryError("cut-cell patch leaves the grid; enlarge the grid extent")
    count = sets.outside[sets.mask_of(nodes)].sum(axis=2)
    centre = grid.coords(cands + 1)
    dot = np.einsum("kcd,kd->kc", centre - cut_pts[:, None, :], normals)
    # lexicographic ranking: count desc, dot desc, corner (m, n) asc
    order = np.lexsort((cands[:, :, 1], cands[:, :, 0], -np.round(dot, 12), -count), axis=-1)
    return cands[np.arange(K), order[:, 0]]


def build_cut_cells(shape, grid, sets):
    """Crossings, normals, patches, ``zeta`` and ``gamma+~`` for classified points."""
    owners = sets.gamma_minus
    pts, normals, dirs = find_intersections(owners, shape, grid, sets)
    corners = _select_patches(pts, normals, owners, dirs, sets, grid)
    off = np.array([(i, j) for j in range(3) for i in range(3)])
    nodes = corners[:, None, :] + off[None, :, :]
    ms = sets.mask_of(nodes)
    g_minus_mask = np.zeros(grid.shape, dtype=bool)
    g_minus_mask[sets.mask_of(owners)] = True
    g_plus_mask = np.zeros(grid.shape, dtype=bool)
    g_plus_mask[sets.mask_of(sets.gamma_plus)] = True
    deep = (sets.inside[ms] & ~g_minus_mask[ms]).sum(axis=1)
    if np.any(deep > 4):
        warnings.warn(
            f"{int(np.sum(deep > 4))} cut-cell patches hold more than 4 interior non-boundary nodes; "
            "the scatterer may be under-resolved",
            ThinGeometryWarning,
            stacklevel=2,
        )
    in_gamma = g_minus_mask[ms] | g_plus_mask[ms]
    zeta = _lex(np.unique(nodes[~in_gamma].reshape(-1, 2), axis=0)) if np.any(~in_gamma) else np.zeros((0, 2), np.int64)
    aug = np.concatenate([sets.gamma_plus, zeta]) if len(zeta) else sets.gamma_plus.copy()
    lookup = {
        "gamma_minus": {(int(a), int(b)): i for i, (a, b) in enumerate(owners)},
        "gamma_plus_aug": {(int(a), int(b)): i for i, (a, b) in enumerate(aug)},
        "e_set": {(int(a), int(b)): i for i, (a, b) in enumerate(sets.e_set)},
    }
    return CutGeometry(
        shape=shape, grid=grid, sets=sets, points=pts, normals=normals, directions=dirs,
        patch_corner=corners, zeta=zeta, gamma_plus_aug=aug, _lookup=lookup,
    )


def covering_extent(shape, h, origin=(0.0, 0.0), minimum=(0, 0), margin=4):
    """Smallest symmetric lattice extent holding ``shape`` with ``margin`` spare nodes."""
    x0, y0, x1, y1 = shape.bounds()
    ex = max(abs(x0 - origin[0]), abs(x1 - origin[0])) / h
    ey = max(abs(y0 - origin[1]), abs(y1 - origin[1])) / h
    return (max(int(minimum[0]), math.ceil(ex) + margin), max(int(minimum[1]), math.ceil(ey) + margin))


def cut_geometry(shape, grid, max_shifts=3):
    """Classify and cut, shifting the origin by ``1e-6 h`` on degenerate nodes.

    Returns the :class:`CutGeometry`; its ``grid`` carries the origin that was
    actually used.
    """
    for attempt in range(max_shifts + 1):
        try:
            sets = classify_points(shape, grid)
        except DegenerateNodeError:
            if attempt == max_shifts:
                raise
            grid = grid.shifted(1e-6 * grid.h, 1e-6 * grid.h)
            logger.info("degenerate node; grid origin shifted to %s", grid.origin)
            continue
        return build_cut_cells(shape, grid, sets)


def count_components(idx):
    """Number of 8-connected components of a lattice point list."""
    idx = np.asarray(idx)
    if len(idx) == 0:
        return 0
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    img = np.zeros((span[1], span[0]), dtype=bool)
    img[idx[:, 1] - lo[1], idx[:, 0] - lo[0]] = True
    _, n = ndimage.label(img, structure=np.ones((3, 3)))
    return int(n)


def dump_point_sets(cut, path):
    """Write the point sets as CSV with columns ``set,m,n,x,y``."""
    groups = [
        ("gamma_minus", cut.gamma_minus),
        ("gamma_plus", cut.gamma_plus),
        ("e", cut.e_set),
        ("zeta", cut.zeta),
    ]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["set", "m", "n", "x", "y"])
        for name, idx in groups:
            xy = cut.grid.coords(idx)
            for (a, b), (x, y) in zip(idx, xy):
                w.writerow([name, int(a), int(b), repr(float(x)), repr(float(y))])

"""End-to-end drivers: single solve, convergence study, LGF tabulation."""

import contextlib
import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import IncidentWave, mie_scattered, mie_solution
from .bae import solve_density, solve_schur, source_pattern
from .closure import BoundaryCondition, assemble_phi
from .config import check_resolution
from .errors import (
    ConfigError, ConvergenceError, DegenerateNodeError, DomainError, ResonanceError, UlgfError,
)
from .geometry import (
    Circle, GridSpec, classify_points, count_components, covering_extent, cut_geometry, dump_point_sets,
)
from .lgf import (
    MIN_BOX_N, cached_lgf_table, compute_lgf_table, load_table, save_table, stencil_residual,
)
from .recon import Region, evaluate_field_direct, reconstruct_fft, total_field, write_field_binary, write_field_csv
from .specfun import lgf_diagonal

logger = logging.getLogger(__name__)

__all__ = [
    "LevelResult",
    "SolveArtifacts",
    "ConvergenceTable",
    "LgfTableReport",
    "incident_wave",
    "boundary_condition",
    "required_box_n",
    "solve_level",
    "run_solve",
    "run_convergence",
    "run_lgf_table",
    "BAND_WIDTH",
]

BAND_WIDTH = 3  # error norms skip nodes within BAND_WIDTH * h of the boundary


@contextlib.contextmanager
def _stage(name):
    """Tag errors raised inside the block with the pipeline stage."""
    try:
        yield
    except UlgfError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def incident_wave(config):
    return IncidentWave(config.k, config.direction)


def boundary_condition(config):
    wave = incident_wave(config)
    if config.robin is not None:
        return BoundaryCondition.robin(wave, *config.robin)
    return BoundaryCondition.tm(wave) if config.polarization == "TM" else BoundaryCondition.te(wave)


def required_box_n(cut, region, kind, omega2):
    """Largest lattice offset between a source node and any target used."""
    src = source_pattern(kind, cut, omega2).nodes
    corners = np.array([[region.m0, region.n0], [region.m0 + region.nx - 1, region.n0 + region.ny - 1]])
    tgt = np.concatenate([cut.gamma_plus_aug, cut.gamma_minus, corners])
    lo = np.minimum(src.min(axis=0), tgt.min(axis=0))
    hi = np.maximum(src.max(axis=0), tgt.max(axis=0))
    return int((hi - lo).max())


@dataclass(eq=False)
class LevelResult:
    n: int
    h: float
    cut: object
    table: object
    cache_hit: bool
    density: object
    report: object
    region: Region
    scattered: object
    timings: dict = field(default_factory=dict)


def solve_level(config, n=None, origin=None, region_nodes=None):
    """Run the pipeline at ``n`` cells per side; ``origin`` overrides the grid centre.

    ``region_nodes`` is the target half-width in lattice nodes at this level
    (defaults to the configured target).
    """
    n = config.grid.n if n is None else int(n)
    h = config.grid.h(n)
    timings = {}
    t = time.perf_counter()
    check_resolution(config.k, h)
    if region_nodes is None:
        hw = config.grid.half_width if config.target_half_width is None else config.target_half_width
        region_nodes = int(round(hw / h))
    region = Region.centered(region_nodes)
    origin = tuple(config.grid.center) if origin is None else tuple(origin)

    with _stage("geometry"):
        extent = covering_extent(config.shape, h, origin, minimum=(n // 2, n // 2))
        cut = cut_geometry(config.shape, GridSpec(h, origin, extent))
    timings["geometry"] = time.perf_counter() - t

    omega2 = (config.k * h) ** 2
    t = time.perf_counter()
    with _stage("lgf"):
        need = required_box_n(cut, region, config.kernel, omega2)
        if config.lgf.box_n is not None and config.lgf.box_n < need:
            raise ConfigError(f"lgf.box_n = {config.lgf.box_n} is below the largest offset {need}")
        box_n = max(MIN_BOX_N, need, config.lgf.box_n or 0)
        table, hit = cached_lgf_table(omega2, box_n, config.lgf.cache_dir, config.lgf.boundary)
    timings["lgf"] = time.perf_counter() - t

    t = time.perf_counter()
    with _stage("closure"):
        closure = assemble_phi(cut, boundary_condition(config))
    timings["closure"] = time.perf_counter() - t

    t = time.perf_counter()
    with _stage("solve"):
        if config.strategy == "schur":
            res = solve_schur(config.kernel, table, cut, closure)
            density, report = res.density, res.report
        else:
            density, report = solve_density(config.kernel, table, cut, closure, config.gmres)
    timings["solve"] = time.perf_counter() - t

    t = time.perf_counter()
    with _stage("reconstruct"):
        recon = reconstruct_fft if config.reconstruction == "fft" else evaluate_field_direct
        scattered = recon(config.kernel, table, cut, density.q, region)
    timings["reconstruct"] = time.perf_counter() - t
    return LevelResult(n, h, cut, table, hit, density, report, region, scattered, timings)


@dataclass(eq=False)
class SolveArtifacts:
    level: LevelResult
    field: object
    report_text: str
    paths: dict


def _summary(config, level):
    cut = level.cut
    lines = [
        "[problem]",
        f"shape = {config.shape.to_dict()['type']}",
        f"k = {config.k}",
        f"n = {level.n}",
        f"h = {level.h:.6g}",
        f"omega2 = {level.table.omega2:.6g}",
        f"grid_origin = {cut.grid.origin[0]:.6g}, {cut.grid.origin[1]:.6g}",
        "[geometry]",
        f"gamma_minus = {len(cut.gamma_minus)}",
        f"gamma_plus = {len(cut.gamma_plus)}",
        f"e = {len(cut.e_set)}",
        f"zeta = {len(cut.zeta)}",
        f"components = {count_components(cut.gamma_minus)}",
        "[lgf]",
        f"box_n = {level.table.box_n}",
        f"cache_hit = {str(level.cache_hit).lower()}",
    ]
    return "\n".join(lines) + "\n"


def _write_report(path, text):
    if path is not None:
        Path(path).write_text(text)


def run_solve(config):
    """Solve one configuration and write the configured outputs.

    A failed GMRES solve still writes the report before re-raising.
    """
    out = Path(config.output.dir)
    out.mkdir(parents=True, exist_ok=True)

    def target(name):
        return None if name is None else out / name

    report_path = target(config.output.report)
    try:
        level = solve_level(config)
    except ConvergenceError as exc:
        if exc.report is not None:
            _write_report(report_path, exc.report.to_text())
        raise

    fld = level.scattered
    if config.output.field_kind == "total":
        fld = total_field(fld, incident_wave(config), level.cut)
    paths = {}
    if config.output.field_csv:
        paths["field_csv"] = target(config.output.field_csv)
        write_field_csv(fld, paths["field_csv"])
    if config.output.field_binary:
        paths["field_binary"] = target(config.output.field_binary)
        write_field_binary(fld, paths["field_binary"])
    if config.output.density:
        paths["density"] = target(config.output.density)
        q = level.density.q
        np.savetxt(paths["density"], np.column_stack([level.cut.gamma_minus, q.real, q.imag]),
                   delimiter=",", header="m,n,re,im", comments="", fmt=["%d", "%d", "%.17g", "%.17g"])
    if config.output.point_sets:
        paths["point_sets"] = target(config.output.point_sets)
        dump_point_sets(level.cut, paths["point_sets"])

    text = _summary(config, level) + level.report.to_text()
    text += "[reconstruction]\n"
    text += f"route = {config.reconstruction}\n"
    text += "".join(f"note = {n}\n" for n in fld.notes)
    text += "[timing]\n" + "".join(f"{k}_s = {v:.3f}\n" for k, v in level.timings.items())
    if report_path is not None:
        paths["report"] = report_path
        _write_report(report_path, text)
    return SolveArtifacts(level, fld, text, paths)


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConvergenceTable:
    """Errors on the coarsest level's target nodes outside the boundary band."""

    n: list
    h: list
    err_max: list
    err_l2: list
    reference: str
    levels: list = field(default_factory=list)

    @staticmethod
    def _orders(err):
        return [None] + [math.log2(a / b) if b > 0 else math.inf for a, b in zip(err, err[1:])]

    @property
    def order_max(self):
        return self._orders(self.err_max)

    @property
    def order_l2(self):
        return self._orders(self.err_l2)

    def write_csv(self, path):
        def fmt(v):
            return "" if v is None else f"{v:.10g}"

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "h", "err_max", "err_l2", "order_max", "order_l2"])
            for row in zip(self.n, self.h, self.err_max, self.err_l2, self.order_max, self.order_l2):
                w.writerow([row[0]] + [fmt(v) for v in row[1:]])


def _check_levels(levels):
    levels = [int(v) for v in levels]
    if len(levels) < 2:
        raise ConfigError("need at least two levels")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise ConfigError(f"levels must double: {a} -> {b}")
    return levels


def _shift_origin(config, n):
    """Grid origin the finest level needs; coarse lattices are sub-lattices of it."""
    h = config.grid.h(n)
    extent = covering_extent(config.shape, h, config.grid.center, minimum=(n // 2, n // 2))
    grid = GridSpec(h, tuple(config.grid.center), extent)
    for _ in range(4):
        try:
            classify_points(config.shape, grid)
            return grid.origin
        except DegenerateNodeError:
            grid = grid.shifted(1e-6 * h, 1e-6 * h)
    raise DegenerateNodeError("no shifted origin avoids boundary nodes")


def run_convergence(config, levels, reference="analytic", keep_levels=False):
    """Error table over doubling ``levels``.

    ``reference="analytic"`` compares with the Mie series (circle, TM or TE);
    ``reference="finest"`` uses the last level as the reference and reports
    the others.
    """
    levels = _check_levels(levels)
    if reference not in ("analytic", "finest"):
        raise ConfigError("reference must be 'analytic' or 'finest'")
    if reference == "analytic" and (not isinstance(config.shape, Circle) or config.robin is not None):
        raise ConfigError("analytic reference needs a circle with TM or TE polarization")
    n0 = levels[0]
    h0 = config.grid.h(n0)
    hw = config.grid.half_width if config.target_half_width is None else config.target_half_width
    t0 = int(round(hw / h0))
    origin = _shift_origin(config, levels[-1])

    coarse = []
    for n in levels:
        s = n // n0
        res = solve_level(config, n, origin, region_nodes=t0 * s)
        logger.info("level %d: %d iterations", n, res.report.iterations)
        coarse.append((res, res.scattered.values[::s, ::s]))

    pts = coarse[0][0].scattered.coords()
    keep = config.shape.sdf(pts) > BAND_WIDTH * h0
    if reference == "analytic":
        sol = mie_solution(incident_wave(config), config.shape.radius, config.polarization,
                           center=config.shape.center)
        ref = np.zeros(pts.shape[:2], dtype=complex)
        ref[keep] = mie_scattered(sol, pts[keep])
        rows = coarse
    else:
        ref = coarse[-1][1]
        rows = coarse[:-1]
    err_max, err_l2 = [], []
    for _, vals in rows:
        e = np.abs(vals - ref)[keep]
        err_max.append(float(e.max()))
        err_l2.append(float(math.sqrt(h0 * h0 * np.sum(e * e))))
    return ConvergenceTable(
        n=[r.n for r, _ in rows], h=[r.h for r, _ in rows], err_max=err_max, err_l2=err_l2,
        reference=reference, levels=[r for r, _ in coarse] if keep_levels else [],
    )


# ---------------------------------------------------------------------------
# LGF tabulation
# ---------------------------------------------------------------------------


@dataclass
class LgfTableReport:
    omega2: float
    box_n: int
    path: str
    cache_hit: bool
    diagonal_deviation: float
    stencil_residual: float
    wall_time: float

    def to_text(self):
        return (
            "[lgf-table]\n"
            f"omega2 = {self.omega2!r}\n"
            f"box_n = {self.box_n}\n"
            f"path = {self.path}\n"
            f"cache_hit = {str(self.cache_hit).lower()}\n"
            f"diagonal_deviation = {self.diagonal_deviation:.3e}\n"
            f"stencil_residual = {self.stencil_residual:.3e}\n"
            f"wall_time_s = {self.wall_time:.3f}\n"
        )


def _diagonal_deviation(table, n_max=20):
    return max(abs(table(n, n) - lgf_diagonal(n, table.omega2)) for n in range(n_max + 1))


def run_lgf_table(omega2, box_n, out, boundary="lattice", retries=3):
    """Tabulate (or reuse) the LGF at ``out`` and validate it.

    An existing file with matching ``omega2`` and ``box_n`` is reused.
    """
    t0 = time.perf_counter()
    omega2 = float(omega2)
    if omega2 == 4.0:
        raise DomainError("omega2 = 4 (k h = 2) is the critical value; nudge the wavenumber or spacing slightly")
    out = Path(out)
    table, hit = None, False
    if out.exists():
        try:
            cand = load_table(out, boundary=boundary)
        except (ValueError, OSError):
            cand = None
        if cand is not None and cand.omega2 == omega2 and cand.box_n >= box_n:
            table, hit = cand, True
    if table is None:
        last = None
        for bump in range(retries + 1):
            try:
                table = compute_lgf_table(omega2, int(box_n) + bump, boundary=boundary)
                break
            except ResonanceError as exc:
                last = exc
        else:
            raise last
        out.parent.mkdir(parents=True, exist_ok=True)
        save_table(table, out)
    return LgfTableReport(omega2, table.box_n, str(out), hit, _diagonal_deviation(table),
                          stencil_residual(table), time.perf_counter() - t0)

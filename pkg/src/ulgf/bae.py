"""Discrete layer potentials and the boundary algebraic system.

Every kernel is the lattice Green's function convolved with a sparse source
pattern attached to each ``gamma-`` node ``t``:

* single layer ``S(s, t) = G(s - t)``: unit source at ``t``;
* double layer ``D(s, t) = sum_{r in E_t} [G(s - t) - G(s - r)]``: weight
  ``|E_t|`` at ``t`` and ``-1`` at each ``E`` neighbour ``r`` of ``t``;
* combined ``C = D - i eta S``.

The density ``q`` lives on ``gamma-``.  :func:`solve_density` solves
``(Phi+ K+~ + Phi- K-) q = g`` matrix-free with restarted GMRES;
:func:`solve_schur` eliminates through a dense factorisation of ``K-``.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from .errors import ConvergenceError, NumericalGuardError
from .lgf import lgf_at

logger = logging.getLogger(__name__)

__all__ = [
    "KernelKind",
    "LayerDensity",
    "GmresParams",
    "GmresReport",
    "SolveReport",
    "SchurResult",
    "IllConditionedWarning",
    "source_pattern",
    "kernel_entry",
    "apply_kernel",
    "dense_kernel",
    "BoundaryOperator",
    "gmres",
    "solve_density",
    "solve_schur",
]

SCHUR_MAX_UNKNOWNS = 4000
_CHUNK = 2_000_000  # kernel entries gathered per block


class IllConditionedWarning(RuntimeWarning):
    """The interior kernel block ``K-`` is close to singular."""


@dataclass(frozen=True)
class KernelKind:
    """``single``, ``double`` or ``combined``; ``eta=None`` means ``max(1, sqrt(omega2))``."""

    name: str = "single"
    eta: float = None

    def __post_init__(self):
        if self.name not in ("single", "double", "combined"):
            raise ValueError(f"unknown kernel kind {self.name!r}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")

    @classmethod
    def single(cls):
        return cls("single")

    @classmethod
    def double(cls):
        return cls("double")

    @classmethod
    def combined(cls, eta=None):
        return cls("combined", eta)

    def eta_for(self, omega2):
        return self.eta if self.eta is not None else max(1.0, math.sqrt(omega2))


@dataclass(frozen=True, eq=False)
class LayerDensity:
    q: np.ndarray
    kind: KernelKind
    omega2: float


@dataclass(frozen=True, eq=False)
class SourcePattern:
    """``rho = matrix @ q`` gives lattice sources at ``nodes``."""

    nodes: np.ndarray
    matrix: sparse.csr_matrix


def source_pattern(kind, cut, omega2):
    """Sparse map from a ``gamma-`` density to lattice point sources."""
    K = len(cut.gamma_minus)
    single = sparse.identity(K, dtype=complex, format="csr")
    if kind.name == "single":
        return SourcePattern(cut.gamma_minus, single)
    e_nb = cut.e_neighbours()
    rows, cols, vals = [], [], []
    for t, ids in enumerate(e_nb):
        rows.append(t)
        cols.append(t)
        vals.append(float(len(ids)))
        rows.extend(K + ids)
        cols.extend([t] * len(ids))
        vals.extend([-1.0] * len(ids))
    nodes = np.concatenate([cut.gamma_minus, cut.e_set]) if len(cut.e_set) else cut.gamma_minus
    dbl = sparse.csr_matrix((np.asarray(vals, complex), (rows, cols)), shape=(len(nodes), K))
    if kind.name == "double":
        return SourcePattern(nodes, dbl)
    pad = sparse.vstack([single, sparse.csr_matrix((len(nodes) - K, K), dtype=complex)])
    return SourcePattern(nodes, (dbl - 1j * kind.eta_for(omega2) * pad).tocsr())


def kernel_entry(kind, table, s, t, cut):
    """``K(s, t)`` for lattice node ``s`` and ``gamma-`` position ``t``, from the definition."""
    s = np.asarray(s)
    tn = cut.gamma_minus[t]
    single = lgf_at(table, *(s - tn))
    if kind.name == "single":
        return single
    e_nb = cut.e_set[cut.e_neighbours()[t]]
    dbl = sum((single - lgf_at(table, *(s - r)) for r in e_nb), 0j)
    if kind.name == "double":
        return dbl
    return dbl - 1j * kind.eta_for(table.omega2) * single


def _green_block(table, targets, sources):
    d = targets[:, None, :] - sources[None, :, :]
    return lgf_at(table, d[..., 0], d[..., 1])


def _convolve(table, targets, sources, rho):
    """``u[s] = sum_j G(targets[s] - sources[j]) rho[j]``, blockwise over targets."""
    targets = np.asarray(targets, dtype=np.int64).reshape(-1, 2)
    out = np.empty(len(targets), dtype=complex)
    step = max(1, _CHUNK // max(1, len(sources)))
    for a in range(0, len(targets), step):
        out[a:a + step] = _green_block(table, targets[a:a + step], sources) @ rho
    return out


def apply_kernel(kind, table, cut, targets, q, pattern=None):
    """``u[s] = sum_t K(s, t) q[t]`` at lattice ``targets`` (dense, matrix-free)."""
    q = np.asarray(q, dtype=complex)
    if q.shape != (len(cut.gamma_minus),):
        raise ValueError(f"density must have length {len(cut.gamma_minus)}")
    pattern = source_pattern(kind, cut, table.omega2) if pattern is None else pattern
    return _convolve(table, targets, pattern.nodes, pattern.matrix @ q)


def dense_kernel(kind, table, cut, targets, pattern=None):
    """Explicit kernel matrix ``K[targets, gamma-]``."""
    pattern = source_pattern(kind, cut, table.omega2) if pattern is None else pattern
    targets = np.asarray(targets, dtype=np.int64).reshape(-1, 2)
    G = _green_block(table, targets, pattern.nodes)
    return np.asarray((pattern.matrix.T @ G.T).T)


class BoundaryOperator:
    """``q -> Phi+ K+~ q + Phi- K- q``.

    By default every application gathers kernel values from the table
    (nothing of size ``|gamma|**2`` is stored).  ``assemble=True`` builds the
    two dense blocks once, trading memory for speed.
    """

    def __init__(self, kind, table, cut, closure, assemble=False):
        self.kind, self.table, self.cut, self.closure = kind, table, cut, closure
        self.pattern = source_pattern(kind, cut, table.omega2)
        self.targets = np.concatenate([cut.gamma_plus_aug, cut.gamma_minus])
        self.n_plus = len(cut.gamma_plus_aug)
        self._dense = dense_kernel(kind, table, cut, self.targets, self.pattern) if assemble else None
        self.applications = 0

    @property
    def size(self):
        return len(self.cut.gamma_minus)

    def traces(self, q):
        """Layer potential at ``gamma+~`` and ``gamma-``."""
        if self._dense is not None:
            u = self._dense @ q
        else:
            u = _convolve(self.table, self.targets, self.pattern.nodes, self.pattern.matrix @ q)
        return u[: self.n_plus], u[self.n_plus:]

    def __call__(self, q):
        self.applications += 1
        u_plus, u_minus = self.traces(np.asarray(q, dtype=complex))
        return self.closure.phi_plus @ u_plus + self.closure.phi_minus @ u_minus


# ---------------------------------------------------------------------------
# GMRES
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GmresParams:
    tol: float = 1e-10
    restart: int = 100
    max_iter: int = 2000


@dataclass
class GmresReport:
    iterations: int = 0
    relative_residual: float = 0.0
    converged: bool = True
    restarts: int = 0
    breakdown: str = None
    basis_size: int = 0
    history: list = field(default_factory=list)


def _givens(a, b):
    """Complex rotation ``(c, s, r)`` with ``[c, s; -conj(s), c] [a; b] = [r; 0]``."""
    rho = math.hypot(abs(a), abs(b))
    if rho == 0.0:
        return 1.0, 0j, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b), abs(b) + 0j
    phase = a / abs(a)
    return abs(a) / rho, phase * np.conj(b) / rho, phase * rho


def gmres(apply, b, tol=1e-10, restart=100, max_iter=2000, x0=None):
    """Restarted GMRES with modified Gram-Schmidt, relative-residual stopping.

    Returns ``(x, GmresReport)``; ``report.iterations`` counts operator
    applications inside Arnoldi cycles.  A zero right-hand side returns the
    zero vector without applying the operator.
    """
    b = np.asarray(b, dtype=complex)
    n = b.size
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    report = GmresReport()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=complex), report
    r = b - apply(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    rel = beta / bnorm
    while rel > tol and report.iterations < max_iter:
        m = min(restart, max_iter - report.iterations, n)
        V = np.zeros((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        V[0] = r / beta
        k = 0
        happy = False
        for j in range(m):
            w = apply(V[j])
            report.iterations += 1
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w = w - H[i, j] * V[i]
            h_next = np.linalg.norm(w)
            H[j + 1, j] = h_next
            for i in range(j):
                hi, hi1 = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hi1
                H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hi1
            cs[j], sn[j], H[j, j] = _givens(H[j, j], H[j + 1, j])
            H[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            rel = abs(g[j + 1]) / bnorm
            report.history.append(float(rel))
            if H[j, j] == 0:
                report.breakdown = "unhappy"
                k = j
                break
            if h_next <= 1e-14 * bnorm:
                happy = True
                report.breakdown = "happy"
                break
            if rel <= tol or report.iterations >= max_iter:
                break
            V[j + 1] = w / h_next
        report.basis_size = k
        if k:
            y = linalg.solve_triangular(H[:k, :k], g[:k])
            x = x + V[:k].T @ y
        r = b - apply(x)
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if report.breakdown == "unhappy" or (happy and rel > tol) or beta == 0.0:
            break
        if rel > tol:
            report.restarts += 1
    report.relative_residual = float(rel)
    report.converged = bool(rel <= tol)
    return x, report


# ---------------------------------------------------------------------------
# Solve strategies
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    strategy: str
    kernel: str
    unknowns: int
    iterations: int
    relative_residual: float
    converged: bool
    wall_time: float
    breakdown: str = None
    notes: list = field(default_factory=list)

    def to_text(self):
        lines = [
            "[solve]",
            f"strategy = {self.strategy}",
            f"kernel = {self.kernel}",
            f"unknowns = {self.unknowns}",
            f"iterations = {self.iterations}",
            f"relative_residual = {self.relative_residual:.3e}",
            f"converged = {str(self.converged).lower()}",
            f"wall_time_s = {self.wall_time:.3f}",
        ]
        if self.breakdown:
            lines.append(f"breakdown = {self.breakdown}")
        lines.extend(f"note = {n}" for n in self.notes)
        return "\n".join(lines) + "\n"


def _check_double_columns(kind, cut):
    """A ``gamma-`` node without ``E`` neighbours gives a zero double-layer column."""
    if kind.name != "double":
        return
    empty = [i for i, ids in enumerate(cut.e_neighbours()) if len(ids) == 0]
    if empty:
        raise NumericalGuardError(
            f"double-layer operator is singular: {len(empty)} gamma- node(s) have no E neighbour "
            f"(first at lattice index {tuple(cut.gamma_minus[empty[0]])}); use the combined kernel"
        )


def solve_density(kind, table, cut, closure, params=GmresParams(), assemble=False):
    """Solve for the layer density with unpreconditioned restarted GMRES.

    Raises
    ------
    ConvergenceError
        with the report attached when the tolerance is not reached.
    NumericalGuardError
        for a double layer with a structurally zero column.
    """
    _check_double_columns(kind, cut)
    t0 = time.perf_counter()
    op = BoundaryOperator(kind, table, cut, closure, assemble=assemble)
    q, info = gmres(op, closure.rhs, tol=params.tol, restart=params.restart, max_iter=params.max_iter)
    report = SolveReport(
        strategy="density", kernel=kind.name, unknowns=op.size, iterations=info.iterations,
        relative_residual=info.relative_residual, converged=info.converged,
        wall_time=time.perf_counter() - t0, breakdown=info.breakdown,
    )
    logger.info("density solve: %d iterations, residual %.2e", info.iterations, info.relative_residual)
    if not info.converged:
        raise ConvergenceError(
            f"GMRES stopped at relative residual {info.relative_residual:.2e} "
            f"after {info.iterations} iterations (tol {params.tol:.1e})",
            report=report,
        )
    return LayerDensity(q=q, kind=kind, omega2=table.omega2), report


@dataclass(frozen=True, eq=False)
class SchurResult:
    u_minus: np.ndarray
    density: LayerDensity
    condition: float
    report: SolveReport


def solve_schur(kind, table, cut, closure, max_unknowns=SCHUR_MAX_UNKNOWNS):
    """Eliminate the density: ``(Phi+ K+~ K-^{-1} + Phi-) u_minus = g``.

    Returns the boundary values ``u_minus`` on ``gamma-`` together with the
    equivalent density ``K-^{-1} u_minus``.
    """
    t0 = time.perf_counter()
    _check_double_columns(kind, cut)
    K = len(cut.gamma_minus)
    if K > max_unknowns:
        raise NumericalGuardError(f"Schur route limited to {max_unknowns} unknowns, got {K}")
    pattern = source_pattern(kind, cut, table.omega2)
    k_minus = dense_kernel(kind, table, cut, cut.gamma_minus, pattern)
    k_plus = dense_kernel(kind, table, cut, cut.gamma_plus_aug, pattern)
    lu = linalg.lu_factor(k_minus)
    k_inv = linalg.lu_solve(lu, np.eye(K, dtype=complex))
    cond = float(np.linalg.norm(k_minus, 1) * np.linalg.norm(k_inv, 1))
    notes = []
    if not np.isfinite(cond) or cond > 1e12:
        msg = f"K- condition number {cond:.2e} exceeds 1e12"
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
        notes.append(msg)
    schur = closure.phi_plus @ (k_plus @ k_inv) + closure.phi_minus.toarray()
    u_minus = linalg.solve(schur, closure.rhs)
    q = linalg.lu_solve(lu, u_minus)
    res = np.linalg.norm(schur @ u_minus - closure.rhs) / max(np.linalg.norm(closure.rhs), 1e-300)
    report = SolveReport(
        strategy="schur", kernel=kind.name, unknowns=K, iterations=0,
        relative_residual=float(res), converged=True, wall_time=time.perf_counter() - t0, notes=notes,
    )
    return SchurResult(u_minus=u_minus, density=LayerDensity(q, kind, table.omega2), condition=cond, report=report)

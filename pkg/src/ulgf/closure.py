"""Lagrange closure on cut cells.

At every boundary crossing ``x`` with outward normal ``n`` the condition
``alpha du/dn + beta u = g`` is collocated using the tensor-product quadratic
interpolant on the owner's 3x3 patch.  Coefficients are split between the
``gamma-`` unknowns (``phi_minus``) and the ``gamma+~`` unknowns
(``phi_plus``).
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import AssemblyError

__all__ = ["BoundaryCondition", "ClosureMatrices", "lagrange_basis_1d", "assemble_phi"]


@dataclass(frozen=True)
class BoundaryCondition:
    """``alpha * du/dn + beta * u = g`` on the boundary, for the scattered field.

    ``g(points, normals)`` returns complex boundary data at the crossings.
    """

    alpha: complex
    beta: complex
    g: object

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("alpha and beta cannot both vanish")

    @classmethod
    def robin(cls, wave, alpha, beta):
        """Total field satisfies the homogeneous condition; ``g = -(alpha du_inc/dn + beta u_inc)``."""
        from .analytic import neumann_data, plane_wave

        def g(points, normals):
            return -(alpha * neumann_data(wave, points, normals) + beta * plane_wave(wave, points))

        return cls(alpha, beta, g)

    @classmethod
    def tm(cls, wave):
        """Sound-soft / TM: ``u_sc = -u_inc``."""
        return cls.robin(wave, 0.0, 1.0)

    @classmethod
    def te(cls, wave):
        """Sound-hard / TE: ``du_sc/dn = -du_inc/dn``."""
        return cls.robin(wave, 1.0, 0.0)


def _weights(nodes):
    x = np.asarray(nodes, dtype=float)
    return np.array([1.0 / np.prod([x[m] - x[j] for j in range(3) if j != m]) for m in range(3)])


def lagrange_basis_1d(nodes, x):
    """Quadratic Lagrange basis on three nodes and its derivative at ``x``.

    Uses the first barycentric form ``phi_m(x) = w_m prod_{j != m} (x - x_j)``
    with ``w_m = 1 / prod_{j != m} (x_m - x_j)``; for equispaced nodes
    ``w = (1/2, -1, 1/2) / h**2``.  No division by ``x - x_m`` occurs, so node
    hits are exact.

    Returns arrays of shape ``(3,) + shape(x)``.
    """
    nd = np.asarray(nodes, dtype=float)
    w = _weights(nd)
    x = np.asarray(x, dtype=float)
    d = [x - nd[j] for j in range(3)]
    vals = np.stack([w[0] * d[1] * d[2], w[1] * d[0] * d[2], w[2] * d[0] * d[1]])
    ders = np.stack([w[0] * (d[1] + d[2]), w[1] * (d[0] + d[2]), w[2] * (d[0] + d[1])])
    return vals, ders


@dataclass(frozen=True, eq=False)
class ClosureMatrices:
    """Sparse ``phi_plus`` (rows x ``gamma+~``), ``phi_minus`` (rows x ``gamma-``) and ``rhs``."""

    phi_plus: sparse.csr_matrix
    phi_minus: sparse.csr_matrix
    rhs: np.ndarray
    alpha: complex
    beta: complex

    def residual(self, u_plus, u_minus):
        return self.phi_plus @ u_plus + self.phi_minus @ u_minus - self.rhs


def _row_coefficients(cut, alpha, beta):
    """Per-owner 9 closure coefficients, patch ordering ``x`` fastest."""
    grid = cut.grid
    h = grid.h
    corner_xy = grid.coords(cut.patch_corner)
    local = np.array([0.0, h, 2.0 * h])
    px, dpx = lagrange_basis_1d(local, cut.points[:, 0] - corner_xy[:, 0])
    py, dpy = lagrange_basis_1d(local, cut.points[:, 1] - corner_xy[:, 1])
    n1, n2 = cut.normals[:, 0], cut.normals[:, 1]
    # coef[k, j, i] for patch node (i, j)
    val = py.T[:, :, None] * px.T[:, None, :]
    grad_n = (py.T[:, :, None] * dpx.T[:, None, :] * n1[:, None, None]
              + dpy.T[:, :, None] * px.T[:, None, :] * n2[:, None, None])
    return (alpha * grad_n + beta * val).reshape(len(cut.points), 9)


def assemble_phi(cut, bc):
    """Assemble the closure operators for condition ``bc`` on ``cut``."""
    coef = _row_coefficients(cut, bc.alpha, bc.beta)
    nodes = cut.patches.reshape(-1, 2)
    rows = np.repeat(np.arange(len(cut.points)), 9)
    col_minus = cut.index_of("gamma_minus", nodes)
    col_plus = cut.index_of("gamma_plus_aug", nodes)
    if np.any((col_minus < 0) & (col_plus < 0)):
        raise AssemblyError("patch node belongs to neither gamma- nor gamma+~")
    flat = coef.reshape(-1).astype(complex)
    K = len(cut.gamma_minus)
    is_minus = col_minus >= 0
    phi_minus = sparse.csr_matrix(
        (flat[is_minus], (rows[is_minus], col_minus[is_minus])), shape=(K, K)
    )
    phi_plus = sparse.csr_matrix(
        (flat[~is_minus], (rows[~is_minus], col_plus[~is_minus])), shape=(K, len(cut.gamma_plus_aug))
    )
    rhs = np.asarray(bc.g(cut.points, cut.normals), dtype=complex)
    return ClosureMatrices(phi_plus=phi_plus, phi_minus=phi_minus, rhs=rhs, alpha=bc.alpha, beta=bc.beta)

"""Fast sine transform solver for the 5-point Helmholtz operator on a rectangle."""

import numpy as np
from scipy import fft as sfft


def dirichlet_eigenvalues(nx, ny, omega2):
    """Eigenvalues of the 5-point operator on an ``nx x ny`` interior with zero Dirichlet data.

    Returned with shape ``(ny, nx)`` (rows index ``y``).
    """
    lx = 2.0 * np.cos(np.arange(1, nx + 1) * np.pi / (nx + 1))
    ly = 2.0 * np.cos(np.arange(1, ny + 1) * np.pi / (ny + 1))
    return ly[:, None] + lx[None, :] + (omega2 - 4.0)


def min_abs_eigenvalue(nx, ny, omega2):
    return float(np.abs(dirichlet_eigenvalues(nx, ny, omega2)).min())


def solve_dirichlet(rhs, omega2, eigenvalues=None):
    """Solve ``[A u] = rhs`` on the interior nodes with homogeneous Dirichlet data.

    ``rhs`` must already contain the boundary contributions moved to the
    right-hand side.  DST-I diagonalises the operator exactly.
    """
    ny, nx = rhs.shape
    lam = dirichlet_eigenvalues(nx, ny, omega2) if eigenvalues is None else eigenvalues
    coeffs = sfft.dstn(rhs, type=1, workers=-1)
    coeffs /= lam
    return sfft.idstn(coeffs, type=1, workers=-1)


def lift_boundary(values):
    """Split a full rectangular array into interior RHS correction from its boundary ring.

    Given ``values`` of shape ``(ny, nx)`` whose outer ring holds Dirichlet
    data, return the ``(ny-2, nx-2)`` array ``-sum(ring neighbours)`` that moves
    the known ring values to the right-hand side.
    """
    corr = np.zeros((values.shape[0] - 2, values.shape[1] - 2), dtype=values.dtype)
    corr[0, :] -= values[0, 1:-1]
    corr[-1, :] -= values[-1, 1:-1]
    corr[:, 0] -= values[1:-1, 0]
    corr[:, -1] -= values[1:-1, -1]
    return corr

"""Incident plane waves and Mie-series reference fields for a circular PEC scatterer."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import bessel_j, hankel1

__all__ = [
    "IncidentWave",
    "MieSolution",
    "MieTruncationWarning",
    "plane_wave",
    "plane_wave_gradient",
    "neumann_data",
    "mie_solution",
    "mie_scattered",
    "mie_scattered_radial_derivative",
]

DEFAULT_TRUNCATION = 100


class MieTruncationWarning(RuntimeWarning):
    """Mie coefficients have not decayed at the truncation order."""


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``exp(i k d.x)`` with unit direction ``d``."""

    k: float
    direction: tuple

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError("wavenumber must be positive")
        d = np.asarray(self.direction, dtype=float)
        norm = float(np.hypot(*d))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"direction must be a unit vector (|d| = {norm})")
        object.__setattr__(self, "direction", (float(d[0]) / norm, float(d[1]) / norm))

    @classmethod
    def from_angle(cls, k, theta):
        return cls(k, (math.cos(theta), math.sin(theta)))

    @property
    def theta(self):
        return math.atan2(self.direction[1], self.direction[0])


def plane_wave(wave, p):
    p = np.asarray(p, dtype=float)
    return np.exp(1j * wave.k * (p[..., 0] * wave.direction[0] + p[..., 1] * wave.direction[1]))


def plane_wave_gradient(wave, p):
    u = plane_wave(wave, p)
    return 1j * wave.k * np.asarray(wave.direction)[..., :] * u[..., None]


def neumann_data(wave, p, normal):
    """``du_inc/dn = i k (d.n) u_inc``."""
    normal = np.asarray(normal, dtype=float)
    dn = normal[..., 0] * wave.direction[0] + normal[..., 1] * wave.direction[1]
    return 1j * wave.k * dn * plane_wave(wave, p)


@dataclass(frozen=True, eq=False)
class MieSolution:
    """Scattered field ``sum_m a_m H_m(k r) exp(i m theta)``, ``|m| <= truncation``.

    ``coefficients[m + truncation] = a_m``; the incidence phase
    ``exp(-i m theta_inc)`` is folded in.  ``ratio[m + truncation]`` holds
    ``J_m(kR)/H_m(kR)`` (TM) or ``J'_m(kR)/H'_m(kR)`` (TE).
    """

    radius: float
    polarization: str
    wave: IncidentWave
    truncation: int
    center: tuple
    coefficients: np.ndarray
    ratio: np.ndarray


def _orders(M):
    return np.arange(-M, M + 1)


def _derivative(f, m, x):
    """``f'_m(x) = (f_{m-1}(x) - f_{m+1}(x)) / 2`` with ``f_{-1} = -f_1``."""
    lower = -f(1, x) if m == 0 else f(m - 1, x)
    return 0.5 * (lower - f(m + 1, x))


def mie_solution(wave, radius, polarization="TM", truncation=DEFAULT_TRUNCATION, center=(0.0, 0.0)):
    """Coefficients for a PEC circle: TM (Dirichlet) or TE (Neumann)."""
    pol = polarization.upper()
    if pol not in ("TM", "TE"):
        raise ValueError(f"polarization must be 'TM' or 'TE', got {polarization!r}")
    kR = wave.k * radius
    M = int(truncation)
    ratio_pos = np.empty(M + 1, dtype=complex)
    for m in range(M + 1):
        if pol == "TM":
            ratio_pos[m] = bessel_j(m, kR) / hankel1(m, kR)
        else:
            ratio_pos[m] = _derivative(bessel_j, m, kR) / _derivative(hankel1, m, kR)
    orders = _orders(M)
    ratio = ratio_pos[np.abs(orders)]  # reflection signs cancel in the ratio
    coeffs = -(1j ** (orders % 4)) * ratio * np.exp(-1j * orders * wave.theta)
    if abs(coeffs[0]) > 1e-14 or abs(coeffs[-1]) > 1e-14:
        warnings.warn(
            f"Mie coefficients at |m| = {M} are {abs(coeffs[-1]):.1e} (> 1e-14); raise the truncation",
            MieTruncationWarning,
            stacklevel=2,
        )
    return MieSolution(radius, pol, wave, M, tuple(center), coeffs, ratio)


def _polar(sol, p):
    p = np.asarray(p, dtype=float)
    dx, dy = p[..., 0] - sol.center[0], p[..., 1] - sol.center[1]
    r = np.hypot(dx, dy)
    if np.any(r < sol.radius * (1.0 - 1e-12)):
        raise DomainError("Mie series evaluated inside the scatterer")
    return r, np.arctan2(dy, dx)


def mie_scattered(sol, p):
    """Scattered field at points ``p`` (``|p - center| >= R``).

    Negative orders use ``H_{-m} = (-1)**m H_m``.
    """
    r, theta = _polar(sol, p)
    k, M = sol.wave.k, sol.truncation
    total = np.zeros(r.shape, dtype=complex)
    for m in range(M, -1, -1):
        h = hankel1(m, k * r)
        term = sol.coefficients[M + m] * np.exp(1j * m * theta)
        if m:
            term = term + (-1) ** m * sol.coefficients[M - m] * np.exp(-1j * m * theta)
        total += term * h
    return total


def mie_scattered_radial_derivative(sol, p):
    """``d u_sc / d r`` at ``p`` via ``H'_m = (H_{m-1} - H_{m+1}) / 2``."""
    r, theta = _polar(sol, p)
    k, M = sol.wave.k, sol.truncation
    total = np.zeros(r.shape, dtype=complex)
    for m in range(M, -1, -1):
        dh = k * _derivative(hankel1, m, k * r)
        term = sol.coefficients[M + m] * np.exp(1j * m * theta)
        if m:
            term = term + (-1) ** m * sol.coefficients[M - m] * np.exp(-1j * m * theta)
        total += term * dh
    return total

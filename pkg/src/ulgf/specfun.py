"""Special functions used by the lattice Green's function and the Mie oracle.

Bessel and Hankel functions of integer order are thin, validated wrappers of
:mod:`scipy.special` (AMOS).  Complete elliptic integrals are computed with the
arithmetic-geometric mean, and Ferrers functions of half-odd degree are
generated from elliptic seeds by three-term recurrence.

Conventions
-----------
* Elliptic integrals use the *parameter* ``m = k**2`` (modulus squared)::

      K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt
      E(m) = int_0^{pi/2} (1 - m sin^2 t)^{1/2} dt

* ``legendre_half`` returns the Ferrers functions (Legendre functions *on the
  cut* ``-1 < z < 1``), both real there.  They are the averages of the
  Legendre functions evaluated at ``z + i0`` and ``z - i0``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "LegendreAccuracyWarning",
    "LegendrePair",
    "bessel_j",
    "hankel1",
    "elliptic_ke",
    "legendre_half",
    "legendre_half_sequence",
    "lgf_diagonal",
]

#: Largest degree index for which ``legendre_half`` is validated.
LEGENDRE_MAX_VALIDATED = 64


class LegendreAccuracyWarning(RuntimeWarning):
    """Emitted when half-degree Legendre values leave the validated range."""


def _check_order(m):
    if int(m) != m or m < 0:
        raise DomainError(f"order must be a non-negative integer, got {m!r}")
    return int(m)


def _check_positive(x, name="x"):
    x = np.asarray(x, dtype=float)
    if not np.all(x > 0):
        raise DomainError(f"{name} must be > 0")
    return x


def bessel_j(m, x):
    """Bessel function of the first kind ``J_m(x)`` for integer ``m >= 0``.

    Negative orders follow from ``J_{-m} = (-1)**m J_m`` on the caller side.
    """
    m = _check_order(m)
    x = _check_positive(x)
    out = special.jv(m, x)
    return out[()] if out.ndim == 0 else out


def hankel1(m, x):
    """Outgoing Hankel function ``H^(1)_m(x) = J_m(x) + i Y_m(x)``."""
    m = _check_order(m)
    x = _check_positive(x)
    out = special.hankel1(m, x)
    return out[()] if out.ndim == 0 else out


def elliptic_ke(m):
    """Complete elliptic integrals ``(K(m), E(m))`` for ``0 <= m < 1``.

    ``m`` is the parameter (squared modulus).  Both integrals come out of one
    arithmetic-geometric mean iteration.
    """
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter must satisfy 0 <= m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    c2_sum = 0.5 * m  # 2**(n-1) * c_n**2 accumulated from n = 0
    weight = 0.5
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        weight *= 2.0
        c2_sum += weight * c * c
        # quadratic convergence: the next c is ~c**2/(4a), below rounding
        if abs(c) <= 1e-9 * a:
            break
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - c2_sum)


@dataclass(frozen=True)
class LegendrePair:
    """Ferrers functions ``P_{n-1/2}(z)`` and ``Q_{n-1/2}(z)``."""

    p: complex
    q: complex
    n: int
    z: float


def legendre_half_sequence(nmax, z):
    """Arrays ``P[n] = P_{n-1/2}(z)`` and ``Q[n] = Q_{n-1/2}(z)``, ``n = 0..nmax``.

    Seeds (with ``z = cos(theta)``)::

        P_{-1/2} = (2/pi) K(s),          P_{1/2} = (2/pi) (2 E(s) - K(s))
        Q_{-1/2} = K(c),                 Q_{1/2} = K(c) - 2 E(c)

    where ``s = (1 - z)/2`` and ``c = (1 + z)/2``.  Both families are
    oscillatory on the cut, so forward recurrence in the degree is stable::

        (2n + 1) F_{n+1/2} = 4 n z F_{n-1/2} - (2n - 1) F_{n-3/2}
    """
    nmax = _check_order(nmax)
    z = float(z)
    if not -1.0 < z < 1.0:
        raise DomainError(f"half-degree Legendre functions need -1 < z < 1, got {z}")
    if nmax > LEGENDRE_MAX_VALIDATED:
        warnings.warn(
            f"legendre_half beyond n={LEGENDRE_MAX_VALIDATED} (requested {nmax}): "
            "recurrence accuracy is not validated there",
            LegendreAccuracyWarning,
            stacklevel=2,
        )
    Ks, Es = elliptic_ke(0.5 * (1.0 - z))
    Kc, Ec = elliptic_ke(0.5 * (1.0 + z))
    P = np.empty(max(nmax + 1, 2))
    Q = np.empty(max(nmax + 1, 2))
    P[0], P[1] = 2.0 / math.pi * Ks, 2.0 / math.pi * (2.0 * Es - Ks)
    Q[0], Q[1] = Kc, Kc - 2.0 * Ec
    for n in range(1, nmax):
        P[n + 1] = (4 * n * z * P[n] - (2 * n - 1) * P[n - 1]) / (2 * n + 1)
        Q[n + 1] = (4 * n * z * Q[n] - (2 * n - 1) * Q[n - 1]) / (2 * n + 1)
    return P[: nmax + 1], Q[: nmax + 1]


def legendre_half(n, z):
    """Ferrers functions of degree ``n - 1/2`` at ``z``, see ``legendre_half_sequence``."""
    P, Q = legendre_half_sequence(n, z)
    return LegendrePair(p=complex(P[n]), q=complex(Q[n]), n=int(n), z=float(z))


def lgf_diagonal(n, omega2):
    """Diagonal lattice Green's function value ``G(n, n)`` in closed form.

    With ``z = 1 - (4 - omega2)**2 / 8`` and Ferrers functions ``P, Q``::

        G(n, n) = (-1)**n / (2 pi i) * [Q_{n-1/2}(z) -+ (pi i / 2) P_{n-1/2}(z)]

    taking ``-`` for ``omega2 < 4`` and ``+`` for ``4 < omega2 < 8``.  The
    outgoing branch is the one reproducing the limiting-absorption integral.
    """
    n = _check_order(n)
    omega2 = float(omega2)
    if omega2 == 4.0:
        raise DomainError("closed form is invalid at omega2 = 4; nudge h to move away from 4")
    if not 0.0 < omega2 < 8.0:
        raise DomainError(f"omega2 must lie in (0, 4) or (4, 8), got {omega2}")
    z = 1.0 - (4.0 - omega2) ** 2 / 8.0
    P, Q = legendre_half_sequence(n, z)
    sign = -1.0 if omega2 < 4.0 else 1.0
    return (-1) ** n / (2j * math.pi) * (Q[n] + sign * 0.5j * math.pi * P[n])

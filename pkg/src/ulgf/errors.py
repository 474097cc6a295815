"""Exception hierarchy shared by all solver stages."""


class UlgfError(Exception):
    """Base class for every error raised by this package."""


class DomainError(UlgfError, ValueError):
    """Argument outside the validated domain of a numerical routine."""


class ResonanceError(UlgfError):
    """A Dirichlet eigenvalue of the difference operator is (numerically) zero."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class LgfRangeError(UlgfError, IndexError):
    """A lattice offset exceeds the extent of a tabulated Green's function."""

    def __init__(self, message, required_box_n):
        super().__init__(message)
        self.required_box_n = required_box_n


class QuadratureError(UlgfError):
    """Quadrature or extrapolation failed to converge."""


class GeometryError(UlgfError):
    """Invalid or unsupported geometric configuration."""


class DegenerateNodeError(GeometryError):
    """A lattice node lies (numerically) on the scatterer boundary."""


class AssemblyError(UlgfError):
    """Cut-cell geometry and closure operators are inconsistent."""


class ConvergenceError(UlgfError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalGuardError(UlgfError):
    """A numerical safety guard tripped (size limit, conditioning, ...)."""


class ConfigError(UlgfError, ValueError):
    """Malformed or inconsistent problem configuration."""

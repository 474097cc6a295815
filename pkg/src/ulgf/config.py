"""Problem configuration: a strict JSON schema with lossless round-trip.

Example::

    {
      "shape": {"type": "circle", "center": [0, 0], "radius": 0.5},
      "k": 10.0,
      "direction": [0.5, 0.8660254037844386],
      "polarization": "TM",
      "grid": {"center": [0, 0], "half_width": 1.6, "n": 256}
    }

Every other section is optional.  ``robin: {"alpha": a, "beta": b}`` replaces
``polarization``; complex numbers are written as ``[re, im]``.  Unknown keys
are rejected.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

from .bae import GmresParams, KernelKind
from .errors import ConfigError, GeometryError
from .geometry import shape_from_dict

__all__ = [
    "ResolutionWarning",
    "GridConfig",
    "LgfConfig",
    "OutputConfig",
    "ProblemConfig",
    "load_config",
    "points_per_wavelength",
    "check_resolution",
]

PPW_WARN = 8.0
PPW_MIN = 4.0


class ResolutionWarning(UserWarning):
    """Fewer than 8 grid points per wavelength."""


def points_per_wavelength(k, h):
    return 2.0 * math.pi / (k * h)


def check_resolution(k, h):
    """Warn below 8 points per wavelength; refuse below 4."""
    ppw = points_per_wavelength(k, h)
    if ppw < PPW_MIN:
        raise ConfigError(f"{ppw:.2f} points per wavelength (k={k}, h={h:.4g}); at least {PPW_MIN:g} required")
    if ppw < PPW_WARN:
        warnings.warn(f"{ppw:.2f} points per wavelength (< {PPW_WARN:g}); expect dispersion error",
                      ResolutionWarning, stacklevel=2)
    return ppw


def _section(d, where, required=(), optional=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    return d


def _pair(v, where):
    try:
        x, y = (float(t) for t in v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a pair of numbers") from None
    return (x, y)


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    re, im = _pair(v, where)
    return complex(re, im)


def _positive(v, where, kind=float):
    try:
        x = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number") from None
    if isinstance(v, bool) or not x > 0 or (kind is int and x != v):
        raise ConfigError(f"{where}: must be a positive {kind.__name__}")
    return x


@dataclass(frozen=True)
class GridConfig:
    """Box ``center +- half_width`` split into ``n`` cells per side (``h = 2 half_width / n``)."""

    center: tuple = (0.0, 0.0)
    half_width: float = 1.6
    n: int = 256

    def __post_init__(self):
        if self.n % 2:
            raise ConfigError("grid.n must be even")

    def h(self, n=None):
        return 2.0 * self.half_width / (self.n if n is None else n)

    @classmethod
    def from_dict(cls, d):
        d = _section(d, "grid", optional=("center", "half_width", "n"))
        return cls(
            _pair(d.get("center", (0.0, 0.0)), "grid.center"),
            _positive(d.get("half_width", 1.6), "grid.half_width"),
            _positive(d.get("n", 256), "grid.n", int),
        )

    def to_dict(self):
        return {"center": list(self.center), "half_width": self.half_width, "n": self.n}


@dataclass(frozen=True)
class LgfConfig:
    box_n: int = None
    cache_dir: str = None
    boundary: str = "lattice"

    @classmethod
    def from_dict(cls, d):
        d = _section(d, "lgf", optional=("box_n", "cache_dir", "boundary"))
        box_n = d.get("box_n")
        boundary = d.get("boundary", "lattice")
        if boundary not in ("lattice", "hankel"):
            raise ConfigError("lgf.boundary must be 'lattice' or 'hankel'")
        return cls(None if box_n is None else _positive(box_n, "lgf.box_n", int), d.get("cache_dir"), boundary)

    def to_dict(self):
        return {"box_n": self.box_n, "cache_dir": self.cache_dir, "boundary": self.boundary}


@dataclass(frozen=True)
class OutputConfig:
    """Output file names, relative to ``dir``; ``None`` skips a file."""

    dir: str = "."
    field_csv: str = "field.csv"
    field_binary: str = None
    report: str = "report.txt"
    density: str = None
    point_sets: str = None
    field_kind: str = "total"

    @classmethod
    def from_dict(cls, d):
        keys = ("dir", "field_csv", "field_binary", "report", "density", "point_sets", "field_kind")
        d = _section(d, "output", optional=keys)
        if d.get("field_kind", "total") not in ("total", "scattered"):
            raise ConfigError("output.field_kind must be 'total' or 'scattered'")
        return cls(**d)

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("dir", "field_csv", "field_binary", "report", "density", "point_sets", "field_kind")}


_TOP_REQUIRED = ("shape", "k", "direction", "grid")
_TOP_OPTIONAL = ("polarization", "robin", "kernel", "gmres", "strategy", "reconstruction",
                 "target_half_width", "lgf", "output")


@dataclass(frozen=True)
class ProblemConfig:
    shape: object
    k: float
    direction: tuple
    grid: GridConfig
    polarization: str = "TM"
    robin: tuple = None
    kernel: KernelKind = field(default_factory=KernelKind)
    gmres: GmresParams = field(default_factory=GmresParams)
    strategy: str = "density"
    reconstruction: str = "fft"
    target_half_width: float = None
    lgf: LgfConfig = field(default_factory=LgfConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if (self.polarization is None) == (self.robin is None):
            raise ConfigError("give exactly one of 'polarization' and 'robin'")
        if self.polarization is not None and self.polarization not in ("TM", "TE"):
            raise ConfigError("polarization must be 'TM' or 'TE'")
        if self.strategy not in ("density", "schur"):
            raise ConfigError("strategy must be 'density' or 'schur'")
        if self.reconstruction not in ("fft", "direct"):
            raise ConfigError("reconstruction must be 'fft' or 'direct'")
        if abs(math.hypot(*self.direction) - 1.0) > 1e-12:
            raise ConfigError("direction must be a unit vector")
        if self.target_half_width is not None and not 0 < self.target_half_width:
            raise ConfigError("target_half_width must be positive")

    @property
    def h(self):
        return self.grid.h()

    @property
    def target_nodes(self):
        """Half-width of the target region in lattice nodes (at ``grid.n``)."""
        hw = self.grid.half_width if self.target_half_width is None else self.target_half_width
        return int(round(hw / self.h))

    @classmethod
    def from_dict(cls, d):
        d = _section(d, "config", _TOP_REQUIRED, _TOP_OPTIONAL)
        try:
            shape = shape_from_dict(d["shape"])
        except GeometryError as exc:
            raise ConfigError(f"shape: {exc}") from None
        except (TypeError, ValueError, KeyError, AttributeError) as exc:
            raise ConfigError(f"shape: malformed ({exc})") from None
        polarization = d.get("polarization", None if "robin" in d else "TM")
        robin = None
        if d.get("robin") is not None:
            r = _section(d["robin"], "robin", ("alpha", "beta"))
            robin = (_complex(r["alpha"], "robin.alpha"), _complex(r["beta"], "robin.beta"))
        kernel = KernelKind()
        if "kernel" in d:
            kd = _section(d["kernel"], "kernel", optional=("kind", "eta"))
            try:
                kernel = KernelKind(kd.get("kind", "single"), kd.get("eta"))
            except ValueError as exc:
                raise ConfigError(f"kernel: {exc}") from None
        gmres = GmresParams()
        if "gmres" in d:
            gd = _section(d["gmres"], "gmres", optional=("tol", "restart", "max_iter"))
            gmres = GmresParams(
                _positive(gd.get("tol", 1e-10), "gmres.tol"),
                _positive(gd.get("restart", 100), "gmres.restart", int),
                _positive(gd.get("max_iter", 2000), "gmres.max_iter", int),
            )
        thw = d.get("target_half_width")
        return cls(
            shape=shape,
            k=_positive(d["k"], "k"),
            direction=_pair(d["direction"], "direction"),
            grid=GridConfig.from_dict(d["grid"]),
            polarization=polarization,
            robin=robin,
            kernel=kernel,
            gmres=gmres,
            strategy=d.get("strategy", "density"),
            reconstruction=d.get("reconstruction", "fft"),
            target_half_width=None if thw is None else _positive(thw, "target_half_width"),
            lgf=LgfConfig.from_dict(d.get("lgf", {})),
            output=OutputConfig.from_dict(d.get("output", {})),
        )

    def to_dict(self):
        out = {
            "shape": self.shape.to_dict(),
            "k": self.k,
            "direction": list(self.direction),
            "grid": self.grid.to_dict(),
            "kernel": {"kind": self.kernel.name, "eta": self.kernel.eta},
            "gmres": {"tol": self.gmres.tol, "restart": self.gmres.restart, "max_iter": self.gmres.max_iter},
            "strategy": self.strategy,
            "reconstruction": self.reconstruction,
            "target_half_width": self.target_half_width,
            "lgf": self.lgf.to_dict(),
            "output": self.output.to_dict(),
        }
        if self.robin is not None:
            out["robin"] = {"alpha": [self.robin[0].real, self.robin[0].imag],
                            "beta": [self.robin[1].real, self.robin[1].imag]}
        else:
            out["polarization"] = self.polarization
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ProblemConfig.from_dict(data)

"""Unfitted lattice Green's function solver for 2D Helmholtz scattering.

The pipeline: tabulate the lattice Green's function (:mod:`ulgf.lgf`),
classify lattice nodes against the scatterer (:mod:`ulgf.geometry`),
assemble the boundary closure (:mod:`ulgf.closure`), solve the boundary
algebraic equations (:mod:`ulgf.bae`) and reconstruct the field
(:mod:`ulgf.recon`).  :mod:`ulgf.driver` chains the stages from a
:class:`~ulgf.config.ProblemConfig`.
"""

from .analytic import IncidentWave, mie_scattered, mie_solution
from .bae import GmresParams, KernelKind, solve_density, solve_schur
from .closure import BoundaryCondition, assemble_phi
from .config import ProblemConfig, load_config
from .driver import run_convergence, run_lgf_table, run_solve, solve_level
from .geometry import Capsule, Circle, GridSpec, Polygon, Union, covering_extent, cut_geometry
from .lgf import cached_lgf_table, compute_lgf_table
from .recon import Region, evaluate_field_direct, reconstruct_fft, total_field

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "Capsule",
    "Circle",
    "GmresParams",
    "GridSpec",
    "IncidentWave",
    "KernelKind",
    "Polygon",
    "ProblemConfig",
    "Region",
    "Union",
    "assemble_phi",
    "cached_lgf_table",
    "compute_lgf_table",
    "covering_extent",
    "cut_geometry",
    "evaluate_field_direct",
    "load_config",
    "mie_scattered",
    "mie_solution",
    "reconstruct_fft",
    "run_convergence",
    "run_lgf_table",
    "run_solve",
    "solve_density",
    "solve_level",
    "solve_schur",
    "total_field",
]

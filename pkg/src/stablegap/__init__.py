"""Spectral gaps of killed symmetric alpha-stable processes on planar domains."""

from .errors import (
    CenteringError,
    MeshTooCoarseError,
    ParameterError,
    PositivityError,
    QuadratureError,
    SolverError,
    StableGapError,
    StepCapError,
    TruncationError,
)
from .geometry import CellGrid, Diamond, Disk, Ellipse, Rectangle, Stadium, TableDomain, mesh, parse_domain
from .operator import DiscreteForm, assemble, killing_rate
from .special import AlphaParams
from .spectral import Spectrum, eigenpairs, green_matrix, heat_kernel, iu_ratio

__version__ = "0.1.0"

__all__ = [
    "AlphaParams", "CellGrid", "CenteringError", "Diamond", "DiscreteForm", "Disk", "Ellipse",
    "MeshTooCoarseError", "ParameterError", "PositivityError", "QuadratureError", "Rectangle",
    "SolverError", "Spectrum", "Stadium", "StableGapError", "StepCapError", "TableDomain",
    "TruncationError", "assemble", "eigenpairs", "green_matrix", "heat_kernel", "iu_ratio",
    "killing_rate", "mesh", "parse_domain",
]

"""Simulation and exact-variance toolkit for short-memory linear processes."""

from __future__ import annotations

__version__ = "0.1.0"

from .coefficients import CoefficientSequence, CoeffDescriptor, Prop10Blocks, tail_mass, total_sum
from .errors import (
    BoundViolation,
    CapacityError,
    CellError,
    ConfigError,
    DomainError,
    QuadratureError,
    ShortMemError,
    TailToleranceError,
)
from .innovations import InnovationModel, Stream
from .linproc import ProcessPath, coupling_stat, filter, sup_bm_distance

__all__ = [
    "BoundViolation",
    "CapacityError",
    "CellError",
    "CoeffDescriptor",
    "CoefficientSequence",
    "ConfigError",
    "DomainError",
    "InnovationModel",
    "ProcessPath",
    "Prop10Blocks",
    "QuadratureError",
    "ShortMemError",
    "Stream",
    "TailToleranceError",
    "coupling_stat",
    "filter",
    "sup_bm_distance",
    "tail_mass",
    "total_sum",
]

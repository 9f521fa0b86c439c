"""Direct and inverse scattering transforms for the defocusing Davey-Stewartson II
and modified Novikov-Veselov hierarchy, with a symbolic engine for the
large-parameter expansion of the scattering solutions."""

from .field_core import ComplexField, FieldFormatError, Grid, make_grid
from .dbar_solver import NonConvergence, ScatteringSolution, SolverConfig

__all__ = [
    "ComplexField",
    "FieldFormatError",
    "Grid",
    "make_grid",
    "NonConvergence",
    "ScatteringSolution",
    "SolverConfig",
]

__version__ = "0.1.0"

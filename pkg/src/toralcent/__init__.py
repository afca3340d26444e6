"""Exact arithmetic, centralizers and perturbation solvers for toral automorphisms."""

from .errors import NumericalFailure, ParseError, PreconditionError, ToralError
from .exact import IntMatrix, IntPoly, char_poly, companion

__version__ = "0.1.0"

__all__ = [
    "IntMatrix",
    "IntPoly",
    "NumericalFailure",
    "ParseError",
    "PreconditionError",
    "ToralError",
    "char_poly",
    "companion",
]

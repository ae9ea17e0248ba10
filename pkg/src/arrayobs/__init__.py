"""Observability and detectability of arrays of identical linear systems.

The decisions are made on matrix-weighted graphs built from the couplings:
the interconnection graph, one eigengraph per distinct eigenvalue of the
system matrix, and matrix-valued effective conductances between pairs.
"""

from .array_model import ArraySystem, observability_matrix, symmetrize
from .decisions import (
    AnalysisReport,
    PathDisagreement,
    analyze,
    is_detectable,
    is_observable,
    is_pair_detectable,
    is_pair_observable,
)
from .ngraph import NGraph, effective_conductance, is_connected, is_pair_connected, laplacian, make_ngraph
from .numerics import DEFAULT_TOL, NumericalError, Tolerance, ValidationError
from .spectral import eig_structure, eigengraph

__version__ = "0.1.0"

__all__ = [
    "ArraySystem",
    "AnalysisReport",
    "DEFAULT_TOL",
    "NGraph",
    "NumericalError",
    "PathDisagreement",
    "Tolerance",
    "ValidationError",
    "analyze",
    "effective_conductance",
    "eig_structure",
    "eigengraph",
    "is_connected",
    "is_detectable",
    "is_observable",
    "is_pair_connected",
    "is_pair_detectable",
    "is_pair_observable",
    "laplacian",
    "make_ngraph",
    "observability_matrix",
    "symmetrize",
]

"""Thermodynamic formalism for quantum iterated function systems."""

from .errors import (
    CapExceeded,
    CoordinateDegenerate,
    DegenerateBranch,
    DegeneratePotential,
    EmbeddingDegenerate,
    Infeasible,
    NonConvergence,
    NotNormalized,
    PreconditionUnmet,
    QifsError,
    Reducible,
    ValidationError,
    ZeroImage,
)
from .qifs import KrausFamily, QifsModel
from .solvers import EigenResult, SolveConfig, solve_lambda_fixed_point, solve_ruelle_eigen

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "CoordinateDegenerate",
    "DegenerateBranch",
    "DegeneratePotential",
    "EigenResult",
    "EmbeddingDegenerate",
    "Infeasible",
    "KrausFamily",
    "NonConvergence",
    "NotNormalized",
    "PreconditionUnmet",
    "QifsError",
    "QifsModel",
    "Reducible",
    "SolveConfig",
    "ValidationError",
    "ZeroImage",
    "solve_lambda_fixed_point",
    "solve_ruelle_eigen",
]

"""Candidate-generating decoders."""
from .homotopy import (
    HomotopyPath,
    Kink,
    KinkCountWarning,
    PathCV,
    cross_validate_path,
    kkt_violation,
    lasso_homotopy,
    path_solution_at,
)
from .omp import OMPState, iter_omp, least_squares_on_support, omp_decode
from .sequence import LASSO_KINK, MEASUREMENT_COUNT, OMP_ITERATION, EstimateSequence

__all__ = [
    "EstimateSequence", "HomotopyPath", "Kink", "KinkCountWarning", "OMPState", "PathCV",
    "cross_validate_path", "iter_omp", "kkt_violation", "lasso_homotopy",
    "least_squares_on_support", "omp_decode", "path_solution_at",
    "LASSO_KINK", "MEASUREMENT_COUNT", "OMP_ITERATION",
]

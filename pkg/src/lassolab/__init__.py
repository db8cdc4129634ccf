"""Generalized LASSO solvers, stationarity certificates and sparsity-bound
verification tools."""

__version__ = "0.1.0"

from .certificate import Certificate, check_stationarity, lambda_reference, zero_solution_threshold
from .model import (GroundTruth, OperatorNorms, ProblemInstance, ProblemParams, Solution,
                    TheoremBounds, objective_value, support, theorem_bounds)
from .rip import NspParams, RipReport, nsp_constants_from_rip, rip_estimate, rip_exact_l2
from .solver import SolverOptions, solve, solve_path

__all__ = [
    "Certificate", "GroundTruth", "NspParams", "OperatorNorms", "ProblemInstance",
    "ProblemParams", "RipReport", "Solution", "SolverOptions", "TheoremBounds",
    "check_stationarity", "lambda_reference", "nsp_constants_from_rip", "objective_value",
    "rip_estimate", "rip_exact_l2", "solve", "solve_path", "support", "theorem_bounds",
    "zero_solution_threshold", "__version__",
]

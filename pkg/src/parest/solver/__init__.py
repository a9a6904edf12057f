"""Multiple-shooting parametrized DDP solver."""

from .ddp import SolverConfig, SolverResult, TRACE_COLUMNS, solve, trace_to_csv
from .problem import (CostExpansion, Iterate, LinearStage, QuadraticTerm, ShootingProblem,
                      residual_expansion, zero_iterate)
from .riccati import (backward_pass, compute_node_expansions, linear_direction, solve_arrival_nullspace,
                      solve_arrival_schur)

__all__ = ["SolverConfig", "SolverResult", "TRACE_COLUMNS", "solve", "trace_to_csv", "CostExpansion",
           "Iterate", "LinearStage", "QuadraticTerm", "ShootingProblem", "residual_expansion",
           "zero_iterate", "backward_pass", "compute_node_expansions", "linear_direction",
           "solve_arrival_nullspace", "solve_arrival_schur"]

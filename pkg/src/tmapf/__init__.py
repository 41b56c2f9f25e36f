"""Multi-agent path finding with movable obstacles (terraforming)."""

from .core import (Graph, MalformedInputError, Problem, Solution, State, UnsettledError, cost1,
                   cost2, solution_cost, sum_of_costs, validate_state, validate_transition)
from .cbs import SolveResult, SolverConfig, assign_movers, cbs_solve, tfcbs_solve
from .oracle import brute_force_optimal, certify
from .pbs import pbs_solve, tfpbs_solve

__all__ = ["Graph", "Problem", "State", "Solution", "MalformedInputError", "UnsettledError",
           "validate_state", "validate_transition", "sum_of_costs", "cost1", "cost2",
           "solution_cost", "SolverConfig", "SolveResult", "assign_movers", "cbs_solve",
           "tfcbs_solve", "pbs_solve", "tfpbs_solve", "certify", "brute_force_optimal"]

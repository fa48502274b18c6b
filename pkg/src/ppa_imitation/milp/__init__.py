"""Exact mixed-integer solver for the assignment models.

Two exact methods share one model family: a generic LP branch-and-bound
(``solve_mip``) and a dedicated Lagrangian search for the assignment model
(``solve_assignment``).  Their kernels are compiled (Cython) when the
extensions are built and fall back to numpy implementations otherwise;
``BACKEND`` says which one is active.
"""

from ._backend import BACKEND
from .assign import AssignResult, PreparedInstance, solve_assignment
from .model import (EQ, GE, LE, LpSolution, MilpModel, MipSolution, ModelBuilder, SolveLimits,
                    SolverError, SolveStats, SolveStatus)
from .mps import export_mps, write_mps
from .ppa import (BruteForceResult, EnumerationResult, actions_from_solution, brute_force_assign,
                  brute_force_solve, build_ppa_model, build_sppa_model, first_action,
                  first_stage_candidates, full_residual, solve_ppa, solve_sppa_by_enumeration)
from .solve import objective_step, solve_lp, solve_mip

__all__ = [
    "BACKEND", "AssignResult", "PreparedInstance", "solve_assignment", "EQ", "GE", "LE",
    "LpSolution", "MilpModel", "MipSolution", "ModelBuilder",
    "SolveLimits", "SolverError", "SolveStats", "SolveStatus", "export_mps", "write_mps",
    "BruteForceResult", "EnumerationResult", "actions_from_solution", "brute_force_assign",
    "brute_force_solve", "build_ppa_model", "build_sppa_model", "first_action",
    "first_stage_candidates", "full_residual", "solve_ppa", "solve_sppa_by_enumeration",
    "objective_step", "solve_lp", "solve_mip",
]

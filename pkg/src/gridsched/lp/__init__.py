"""Embedded LP engine: bounded-variable revised simplex plus LP-format I/O."""

from gridsched.lp.program import Basis, LinearProgram, LpSolution, LpStatus, SolverError
from gridsched.lp.simplex import solve, warm_start_solve

__all__ = ["Basis", "LinearProgram", "LpSolution", "LpStatus", "SolverError", "solve", "warm_start_solve"]

"""LP/MIP solving, MPS export and solution exchange."""
from .simplex import LpSolution, simplex
from .lp import solve_lp
from .mip import MipSolution, branch_and_bound, choose_engine, relative_gap, solve_mip
from .mps import MpsError, export_mps, import_solution, read_mps, write_solution

__all__ = [
    "LpSolution",
    "MipSolution",
    "MpsError",
    "branch_and_bound",
    "choose_engine",
    "export_mps",
    "import_solution",
    "read_mps",
    "relative_gap",
    "simplex",
    "solve_lp",
    "solve_mip",
    "write_solution",
]

from .core import BACKEND  # noqa: F401
from .linprog import LinearProgram, SolveReport, solve_lp  # noqa: F401
from .milp import MixedIntegerProgram, solve_milp  # noqa: F401

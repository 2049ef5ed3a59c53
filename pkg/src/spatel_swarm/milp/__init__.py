"""Small MILP layer: model builder, branch-and-bound solver, LP file exchange."""

from .bnb import (
    EXACT,
    RELAXED,
    S_INFEASIBLE,
    S_OPTIMAL,
    S_RELAXATION,
    S_TIME_LIMIT,
    MilpSolution,
    solve,
)
from .lpformat import (
    IMPORTED,
    SolutionValidationError,
    export_lp,
    import_solution,
    lp_text,
    parse_solution,
    solution_text,
)
from .model import (
    BINARY,
    CONTINUOUS,
    EQ,
    FEAS_TOL,
    GE,
    INT_TOL,
    INTEGER,
    LE,
    Constraint,
    LinExpr,
    MilpError,
    MilpModel,
    SealedModelError,
    Var,
)

__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "LE", "GE", "EQ", "FEAS_TOL", "INT_TOL",
    "EXACT", "RELAXED", "S_OPTIMAL", "S_INFEASIBLE", "S_RELAXATION", "S_TIME_LIMIT", "IMPORTED",
    "Var", "LinExpr", "Constraint", "MilpModel", "MilpSolution", "MilpError", "SealedModelError",
    "SolutionValidationError", "solve", "export_lp", "import_solution", "lp_text",
    "parse_solution", "solution_text",
]

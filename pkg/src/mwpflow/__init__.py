"""Polynomial-growth certification and loop optimization for a C subset."""

from .algebra import (
    AlgebraError,
    Matrix,
    MissingChoice,
    Monomial,
    Poly,
    Scalar,
    eval_matrix,
    eval_poly,
    mat_add,
    mat_id,
    mat_mul,
    mat_star,
    poly_add,
    poly_mul,
)
from .analysis import (
    AnalysisResult,
    ArityMismatch,
    BoundReport,
    FeasibleSet,
    FunctionSummary,
    InfeasibleChoice,
    UnknownCallee,
    analyze_function,
    analyze_program,
    feasible_choices,
)
from .depgraph import (
    DepGraph,
    FissionPlan,
    NoSplit,
    build_dep_graph,
    control_kernel,
    fission_plan,
    invariance_degrees,
    use_def,
)
from .emit import emit
from .interp import (
    FuelExhausted,
    IndexOutOfBounds,
    InterpError,
    RunResult,
    UninitializedRead,
    classify_growth,
    growth_probe,
    run,
)
from .parser import FrontendError, SubsetSyntaxError, UnsupportedConstruct, ValidationError, parse, validate
from .transform import NothingToHoist, Rewrite, apply_all, fission_loop, hoist_loop

__version__ = "0.1.0"

__all__ = [
    "AlgebraError",
    "AnalysisResult",
    "ArityMismatch",
    "BoundReport",
    "DepGraph",
    "FeasibleSet",
    "FissionPlan",
    "FrontendError",
    "FuelExhausted",
    "FunctionSummary",
    "IndexOutOfBounds",
    "InfeasibleChoice",
    "InterpError",
    "Matrix",
    "MissingChoice",
    "Monomial",
    "NoSplit",
    "NothingToHoist",
    "Poly",
    "Rewrite",
    "RunResult",
    "Scalar",
    "SubsetSyntaxError",
    "UninitializedRead",
    "UnknownCallee",
    "UnsupportedConstruct",
    "ValidationError",
    "analyze_function",
    "analyze_program",
    "apply_all",
    "build_dep_graph",
    "classify_growth",
    "control_kernel",
    "emit",
    "eval_matrix",
    "eval_poly",
    "feasible_choices",
    "fission_loop",
    "fission_plan",
    "growth_probe",
    "hoist_loop",
    "invariance_degrees",
    "mat_add",
    "mat_id",
    "mat_mul",
    "mat_star",
    "parse",
    "poly_add",
    "poly_mul",
    "run",
    "use_def",
    "validate",
]

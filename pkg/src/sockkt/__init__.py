"""Second-order KKT certification for inequality-constrained programs.

Given a problem with C1 data, a candidate point, and critical directions,
the toolkit either produces second-order multiplier certificates or explicit
violation witnesses, and diagnoses the constraint qualifications the
underlying theorems need (Zangwill, second-order Zangwill, Abadie, Guignard).
"""

__version__ = "0.1.0"

from .cones import (ConeMembership, DirectionAnalysis, PointContext, TangentBudget,
                    Tolerances, analyze_direction, in_A, in_B,
                    in_feasible_direction_cone, in_linearizing_cone,
                    in_pseudotangent, point_context, sample_cone_directions,
                    tangent_probe)
from .cq import (CQEntry, check_abadie, check_guignard, check_so_zangwill,
                 check_zangwill, run_cq_checks)
from .deriv import CurveProbe, SecondDirDeriv, StepGrid, curve_second_deriv, second_dir_deriv
from .expr import (EvalError, Expr, ExprError, NondifferentiableError, ParseError,
                   differentiate, evaluate, gradient, parse, to_string)
from .gencvx import (ConvexityVerdict, probe_pseudoconvex, probe_so_pseudoconvex,
                     probe_solpc_right)
from .kkt import (DerivativeUnavailable, DirectionVerdict, MultiplierCertificate,
                  ViolationCertificate, certify_direction, find_multipliers,
                  first_order_kkt, primal_condition, system_63_solvable,
                  system_64_solvable)
from .lp import LinearProgram, LPError, LPOutcome, solve, strict_system_solvable
from .problem import (Problem, ProblemValidationError, load_problem_dict,
                      load_problem_file, problem_schema, report_schema)
from .run import RunOptions, run_check, run_command, run_convexity, run_cq, run_deriv

__all__ = [
    "__version__",
    "ConeMembership", "DirectionAnalysis", "PointContext", "TangentBudget",
    "Tolerances", "analyze_direction", "in_A", "in_B",
    "in_feasible_direction_cone", "in_linearizing_cone", "in_pseudotangent",
    "point_context", "sample_cone_directions", "tangent_probe",
    "CQEntry", "check_abadie", "check_guignard", "check_so_zangwill",
    "check_zangwill", "run_cq_checks",
    "CurveProbe", "SecondDirDeriv", "StepGrid", "curve_second_deriv", "second_dir_deriv",
    "EvalError", "Expr", "ExprError", "NondifferentiableError", "ParseError",
    "differentiate", "evaluate", "gradient", "parse", "to_string",
    "ConvexityVerdict", "probe_pseudoconvex", "probe_so_pseudoconvex", "probe_solpc_right",
    "DerivativeUnavailable", "DirectionVerdict", "MultiplierCertificate",
    "ViolationCertificate", "certify_direction", "find_multipliers",
    "first_order_kkt", "primal_condition", "system_63_solvable", "system_64_solvable",
    "LinearProgram", "LPError", "LPOutcome", "solve", "strict_system_solvable",
    "Problem", "ProblemValidationError", "load_problem_dict", "load_problem_file",
    "problem_schema", "report_schema",
    "RunOptions", "run_check", "run_command", "run_convexity", "run_cq", "run_deriv",
]

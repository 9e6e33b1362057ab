"""Monotone-operator solver for x'' = f(t, x', x) - h with Dirichlet conditions.

The discrete scheme is solved by a certified iteration; companion modules
provide reference oracles, convergence metrics and dependence experiments.
"""
__version__ = "0.1.0"

from .mesh import (Grid, MeshFunction, NodeLoad, SingularSystemError, forward_difference,
                   inner_e, norm_0, norm_e, riesz_representative, second_difference,
                   tridiagonal_solve)
from .problems import (Nonlinearity, ProbeReport, RhsFunction, builtin, builtin_rhs,
                       probe_operator_monotonicity, probe_p1, probe_p2)
from .system import DiscreteProblem, Tridiagonal, jacobian, residual, weak_pairing
from .solver import (LineSearchError, Solution, SolverOptions, certificate,
                     lipschitz_inverse_check, solve)
from .reference import (ReferenceSolution, fine_grid, linear_direct, manufactured,
                        shooting)
from .analysis import (BoundReport, ErrorPair, InterpolantPair, RateFit, bound_report,
                       fit_rate, grid_errors, interpolants, strong_form_check)
from .dependence import (DependenceRow, WeakFamily, dependence_experiment,
                         family_member, h1_gain_ratio, lemma_ogr_c_ratio)

__all__ = [
    "Grid",
    "MeshFunction",
    "NodeLoad",
    "SingularSystemError",
    "forward_difference",
    "inner_e",
    "norm_0",
    "norm_e",
    "riesz_representative",
    "second_difference",
    "tridiagonal_solve",
    "Nonlinearity",
    "ProbeReport",
    "RhsFunction",
    "builtin",
    "builtin_rhs",
    "probe_operator_monotonicity",
    "probe_p1",
    "probe_p2",
    "DiscreteProblem",
    "Tridiagonal",
    "jacobian",
    "residual",
    "weak_pairing",
    "LineSearchError",
    "Solution",
    "SolverOptions",
    "certificate",
    "lipschitz_inverse_check",
    "solve",
    "ReferenceSolution",
    "fine_grid",
    "linear_direct",
    "manufactured",
    "shooting",
    "BoundReport",
    "ErrorPair",
    "InterpolantPair",
    "RateFit",
    "bound_report",
    "fit_rate",
    "grid_errors",
    "interpolants",
    "strong_form_check",
    "DependenceRow",
    "WeakFamily",
    "dependence_experiment",
    "family_member",
    "h1_gain_ratio",
    "lemma_ogr_c_ratio",
]

"""Spectral solver and maximal-regularity verifier for block evolutionary equations."""

from .conditions import ConditionReport, check_conditions, certify_c0, certify_c1, certify_c2, hermitian_min_eig
from .examples import Kernel, build_example, fractional_problem, heat_problem, integro_problem, second_order_problem
from .regularity import RegularityReport, build_report, cu_bound_check, literal_residual, wt_sup_check
from .solver import EvolutionaryProblem, Solution, reduce_second_order, solve_spectral, solve_time_stepping
from .spatial import SpatialOperator, dirichlet_gradient_1d, dirichlet_gradient_2d, skew_block
from .symbols import FrequencyPoint, MaterialLaw, eval_law, frac_power, fractional_derivative
from .weighted_time import TimeGrid, WeightedSignal, fourier_laplace, inverse_fourier_laplace, weighted_inner, yosida

__version__ = "0.1.0"

"""Best approximation of vector-valued functions by k-valued simple functions in L^p."""

__version__ = "0.1.0"

from .norms import NormDescriptor, dir_deriv, eval_norm, grad_pth_power, parse_norm
from .space import MeasureSpace, load, lp_norm, read_space, tail_truncate, write_space
from .simplefn import SimpleFunction, bounded_reduction, cost, degree, reduce
from .pmean import PMeanResult, chebyshev_center, gradient_condition, m_p_value, mean_certificate, solve_pmean
from .voronoi import VoronoiDiagram, assign, boundary_mass, boundary_reassign, project, voronoi_residual
from .quantizer import (Certificate, NoSplitError, QuantizeReport, QuantizerConfig, certify, lloyd,
                        minimizing_trace, reseed_split)
from .oracle import OracleResult, brute_force, grid_lower_bound

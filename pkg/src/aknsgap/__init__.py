"""Exact stationary AKNS computations and finite-gap certification at simple poles."""

__version__ = "0.1.0"

from .algebra import DiffPoly, GaussRat, NotExactError, ParseError, SymPoly, dp_derive, dp_integrate, parse_expr
from .akns import (ConstantVector, HierarchyPair, Inconclusive, Infeasible, InternalInvariantError, SolveError,
                   StationaryVerdict, compute_fg, propagation_check, solve_constants, solve_polynomial_system,
                   stationary_depth, stationary_residual)
from .series import (DepthError, EllipticParams, LaurentSeries, csc_series, eval_diffpoly, example2_pq,
                     sin_series, wp_series, wp_taylor_at_halfperiod)
from .poles import PoleData, PoleReport, classify_pole, fg_pole_probe, leading_square_root, product_laurent
from .frobenius import (FrobeniusSolution, MeromorphyVerdict, ResonanceObstruction, indicial_exponents,
                        local_solution, meromorphy_verdict, residual_check)
from .gapcheck import GapReport, PotentialPoleData, build_potential, finite_gap_check, gap_pipeline

"""Numerical toolkit for Toeplitz products T_F T_{G*} on the
vector-valued Bergman space of the unit disk.

The package covers four layers: exact polynomial/operator primitives
(`core`, `toeplitz`), the matrix Berezin transform with series and
quadrature backends (`berezin`), boundedness/invertibility condition
functionals with calibrated bound audits (`conditions`), and a dyadic
matrix-weight toolkit with A2 constants, Calderon-Zygmund selection and
reverse-Hoelder certificates (`dyadic`).  `verify.run_all` executes the
thirteen-point acceptance checklist; the `bergtoep` CLI drives batch
jobs.
"""

from .berezin import (QuadratureRule, WGrid, berezin_gram,
                      berezin_gram_grid, berezin_monomial,
                      berezin_power_gram, berezin_quadrature,
                      default_rule, kernel_weight, mobius,
                      mobius_invariance_residual, normalized_kernel,
                      p0_transform)
from .conditions import (ConditionParams, ConditionReport,
                         calibrated_derivative_constant, classify,
                         coanalytic_apply, derivative_term_audit,
                         double_integral_values, holder_bound_audit,
                         invertibility_floor, necessary_sup,
                         necessary_values, sufficient_double_integral,
                         sufficient_eps, sufficient_eps_values)
from .core import (HermitianField, HermitianMatrix, PolyMatrixSymbol,
                   PowerSeries, VectorPoly, gram_at, hermitian_order,
                   hermitian_power, inverse_gram_at,
                   ip_via_derivative_formula, jacobi_eigh, lambda_min,
                   monomial_inner, series_inner, trace_gram_field,
                   vector_inner)
from .dyadic import (CZDecomposition, DyadicRectangle,
                     ReverseHolderCertificate, a2_constant,
                     a2_expression, ancestor_at, conjugation_a2_check,
                     containing_rectangles, cz_decompose,
                     dyadic_maximal, fairshare_check, level_rectangles,
                     pseudo_disk_cover, rect_average, rect_nodes,
                     reverse_holder, reverse_holder_search,
                     scalar_a2_constant, weighted_projection_ratio)
from .errors import (BadIndex, BergtoepError, BufferTooSmall,
                     ComputeBudget, DepthExhausted, DimensionMismatch,
                     DivergenceSuspected, NoConvergence, NonRealTrace,
                     NotPSD, NotSubset, ParseError, RangeError,
                     SingularSymbol, ThresholdTooLow, ZeroDenominator)
from .toeplitz import (TruncatedOperator, analytic_toeplitz,
                       coanalytic_toeplitz, coeff_vector, operator_norm,
                       park_residual, product_restricted, rank_one,
                       rank_one_trace)
from .verify import CheckResult, format_result, run_all

__version__ = "0.1.0"

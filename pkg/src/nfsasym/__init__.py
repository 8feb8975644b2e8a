"""Exact and numeric toolkit for the asymptotic expansion of the heuristic
Number Field Sieve complexity: Dickman-de Bruijn series machinery, an exact
bivariate-series engine over Q(log 2, log 3, ...), the guess/prove pipeline
for the minimizing parameters, and floating-point evaluators for the
resulting truncations.
"""

from .exact import (
    LogConstant, RadicalScale, Rational,
    log_of_rational, logconst_eval_f64, scale_log, scale_ratio_as_rational,
)
from .pseries import (
    TruncatedBiSeries, LOG_RING,
    delta, neumann_inverse_one_plus_delta,
    series_add, series_eval_f64, series_exp, series_inverse, series_log,
    series_mul, series_neg,
)
from .dickman import (
    PSeries, QSeries, RhoValue,
    cep_series, integral_s_numeric, log_rho_debruijn,
    p_series_recurrence, p_series_stirling, q_series,
    radius_constant, radius_threshold_check, rho_numeric, s_numeric,
    stirling_first_signed,
)
from .asym import (
    ScaledAsymptotic,
    asym_add, asym_div, asym_log, asym_mul, asym_neg, p_of, x_of, y_of,
)
from .nfsopt import (
    CandidateExpansion, ExistenceCertificate, ExpansionResult, ProofLog,
    build_constraint, classify_pattern, compute_proven_expansion,
    constraint_residual, guess_terms, prove_existence, prove_minimality,
)
from .evalkit import (
    complexity_log, figure_data, g_demo, xi_eval, xi_eval_loglog, xi_gap_loglog,
)

__version__ = "0.1.0"

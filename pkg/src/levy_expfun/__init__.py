"""Exact distribution of the exponential functional of Kou and Brownian Lévy
processes, with GMDB risk measures built on it."""

from .exceptions import (
    CancellationError,
    ConditionError,
    ConvergenceError,
    GammaPoleError,
    IntegerSpacingError,
    NumericalError,
    ParameterError,
    PoleError,
    RootFindingError,
)
from .expfun import (
    ExpFunctionalQuery,
    appendix_b_residual,
    cdf,
    density,
    h_identity_residual,
    mellin_contour_check,
    mellin_m0,
    mellin_mxq,
    tail_expectation,
    tail_probability,
)
from .gbm import gbm_cdf, gbm_mean, gbm_tail_expectation, whittaker_m, whittaker_w
from .kou import KouParams, RootSystem, laplace_exponent, moment_match, psi_prime, solve_roots
from .mc import SimConfig, estimate_tail_prob, net_liability_path, sample_lifetime
from .mortality import ExpSum, ExponentialSumFit, GompertzMakeham, fit_exponential_sum
from .risk import Contract, GmdbRiskModel, RiskReport, cte, strike_from_loss, value_at_risk
from .risk import tail_probability as gmdb_tail_probability
from .specfun import GammaRatioSpec, MeijerGSpec, gamma_ratio, hyper_pfq, hyper_pfq_regularized, meijer_g

__version__ = "0.1.0"

__all__ = [
    "CancellationError", "ConditionError", "ConvergenceError", "GammaPoleError", "IntegerSpacingError",
    "NumericalError", "ParameterError", "PoleError", "RootFindingError",
    "ExpFunctionalQuery", "appendix_b_residual", "cdf", "density", "h_identity_residual",
    "mellin_contour_check", "mellin_m0", "mellin_mxq", "tail_expectation", "tail_probability",
    "gbm_cdf", "gbm_mean", "gbm_tail_expectation", "whittaker_m", "whittaker_w",
    "KouParams", "RootSystem", "laplace_exponent", "moment_match", "psi_prime", "solve_roots",
    "SimConfig", "estimate_tail_prob", "net_liability_path", "sample_lifetime",
    "ExpSum", "ExponentialSumFit", "GompertzMakeham", "fit_exponential_sum",
    "Contract", "GmdbRiskModel", "RiskReport", "cte", "gmdb_tail_probability", "strike_from_loss",
    "value_at_risk",
    "GammaRatioSpec", "MeijerGSpec", "gamma_ratio", "hyper_pfq", "hyper_pfq_regularized", "meijer_g",
]

"""Risk measures for the net liability of a guaranteed minimum death benefit.

The fee-adjusted account is ``F_t = F0 exp(X*_t)`` with ``X*`` the equity
model with drift ``mu - r - m``.  With a lifetime density
``f(t) ~ sum_i w_i exp(-s_i t)``, the Laplace transform in ``t`` turns the
fixed-horizon functional into ``I_{x,s_i}`` with ``x = 1/m_d``, so

    P(L > V)  ~ sum_i w_i / s_i * P(I_{x,s_i} < K),       K = (F0 - V)/(m_d F0),
    CTE_p     ~ F0 - m_d F0/(1-p) * sum_i w_i / s_i * E[I_{x,s_i} 1{I < K}].
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import expfun, gbm
from ._validation import check_is_fitted, check_open_unit, check_positive, check_real
from .exceptions import CancellationError, NumericalError, ParameterError
from .kou import KouParams
from .mortality import ExpSum, GompertzMakeham, fit_exponential_sum

IMAG_TOL = 1e-8
VAR_WIDTH = 1e-7


@dataclass(frozen=True)
class Contract:
    """Contract economics; ``equity`` is the model before the fee/yield adjustment."""

    equity: KouParams
    F0: float = 1.0
    G0: float = 1.0
    r: float = 0.02
    m: float = 0.01
    m_d: float = 0.0035

    def __post_init__(self):
        check_positive(self.F0, "F0")
        check_positive(self.G0, "G0")
        check_real(self.r, "r")
        check_real(self.m, "m")
        check_positive(self.m_d, "m_d")

    @property
    def x(self) -> float:
        return 1.0 / self.m_d

    @property
    def adjusted(self) -> KouParams:
        return self.equity.with_drift(self.equity.mu - self.r - self.m)


@dataclass(frozen=True)
class RiskReport:
    level: float
    value: float
    imag_residual: float
    terms_used: int
    flags: tuple = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def strike_from_loss(contract: Contract, V: float) -> float:
    """``K = (F0 - V)/(m_d F0)``; non-positive once ``V >= F0``."""
    V = check_real(V, "V")
    return (contract.F0 - V) / (contract.m_d * contract.F0)


def _node_values(contract: Contract, expsum: ExpSum, K: float, kind: str, threads: int = 1):
    params = contract.adjusted
    x = contract.x

    def one(i):
        s, w = expsum.terms[i]
        try:
            if params.lam == 0.0:
                if kind == "cdf":
                    v = gbm.gbm_cdf(x, s, params.mu, params.sigma, K)
                else:
                    v = gbm.gbm_tail_expectation(x, s, params.mu, params.sigma, K, "below")
            else:
                q = expfun.ExpFunctionalQuery(x, s, params)
                v = expfun.cdf(q, K) if kind == "cdf" else expfun.tail_expectation(q, K, "below")
        except NumericalError as exc:
            exc.where = f"risk node {i} (s = {s:.6g})"
            raise
        return w / s * complex(v)

    idx = range(len(expsum.terms))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(one, idx))
    else:
        vals = [one(i) for i in idx]
    # fixed reduction order keeps results independent of the thread count
    return math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals)


def _checked(re, im, what):
    if abs(im) > IMAG_TOL * max(1.0, abs(re)):
        raise CancellationError(f"{what}: imaginary residual {im:.3g} exceeds {IMAG_TOL:g}")
    return re


def tail_probability_report(contract: Contract, expsum: ExpSum, V: float, threads: int = 1) -> RiskReport:
    K = strike_from_loss(contract, V)
    if V < 0.0:
        # for V < 0 the event {L > V} also contains paths where the guarantee is
        # out of the money, and L is no longer F0 - m_d F0 I
        raise ParameterError(f"the representation of P(L > V) needs V >= 0, got {V!r}")
    if K <= 0.0:
        return RiskReport(V, 0.0, 0.0, 0, ("loss level at or above F0",))
    re, im = _node_values(contract, expsum, K, "cdf", threads)
    return RiskReport(V, _checked(re, im, "tail probability"), abs(im), len(expsum.terms))


def tail_probability(contract: Contract, expsum: ExpSum, V: float, threads: int = 1) -> float:
    """``P(L > V)`` for ``V >= 0``."""
    return tail_probability_report(contract, expsum, V, threads).value


def value_at_risk_report(contract: Contract, expsum: ExpSum, p: float, threads: int = 1) -> RiskReport:
    p = check_open_unit(p, "p")
    target = 1.0 - p
    lo, hi = 0.0, contract.F0
    f_lo = tail_probability(contract, expsum, lo, threads) - target
    if not f_lo > 0.0:
        raise ParameterError(f"P(L > 0) = {f_lo + target:.6g} is not above 1 - p; VaR_p is not positive")
    worst_im = 0.0
    while hi - lo >= VAR_WIDTH:
        mid = 0.5 * (lo + hi)
        rep = tail_probability_report(contract, expsum, mid, threads)
        worst_im = max(worst_im, rep.imag_residual)
        if rep.value - target > 0.0:
            lo = mid
        else:
            hi = mid
    return RiskReport(p, 0.5 * (lo + hi), worst_im, len(expsum.terms), (f"bracket=[{lo!r}, {hi!r}]",))


def value_at_risk(contract: Contract, expsum: ExpSum, p: float, threads: int = 1) -> float:
    """``VaR_p(L)`` by bisection on ``[0, F0)`` down to a bracket narrower than 1e-7."""
    return value_at_risk_report(contract, expsum, p, threads).value


def cte_report(contract: Contract, expsum: ExpSum, p: float, var_p: float = None, threads: int = 1) -> RiskReport:
    p = check_open_unit(p, "p")
    if var_p is None:
        var_p = value_at_risk(contract, expsum, p, threads)
    K = strike_from_loss(contract, var_p)
    if K <= 0.0:
        raise ParameterError("VaR at or above F0 leaves no conditional tail")
    re, im = _node_values(contract, expsum, K, "te", threads)
    scale = contract.m_d * contract.F0 / (1.0 - p)
    value = contract.F0 - scale * _checked(re, im, "CTE")
    return RiskReport(p, value, abs(im) * scale, len(expsum.terms), (f"var={var_p!r}",))


def cte(contract: Contract, expsum: ExpSum, p: float, var_p: float = None, threads: int = 1) -> float:
    """``CTE_p(L)``; ``var_p`` defaults to :func:`value_at_risk`."""
    return cte_report(contract, expsum, p, var_p, threads).value


class GmdbRiskModel(BaseEstimator):
    """Estimator-style wrapper: ``fit`` builds the mortality exponential sum,
    ``predict`` returns tail probabilities ``P(L > V)``.

    Pass ``expsum`` to pin a previously fitted sum instead of refitting.
    """

    def __init__(
        self,
        mu=0.064161, sigma=0.16, lam=1.0, p=0.3, rho=20.0, rho_hat=10.0,
        F0=1.0, G0=1.0, r=0.02, m=0.01, m_d=0.0035,
        age=65.0, A=0.0007, B=0.00005, c=10**0.04,
        n_terms=15, horizon=100.0, samples=201, method="hankel",
        expsum=None, threads=1,
    ):
        self.mu, self.sigma, self.lam, self.p, self.rho, self.rho_hat = mu, sigma, lam, p, rho, rho_hat
        self.F0, self.G0, self.r, self.m, self.m_d = F0, G0, r, m, m_d
        self.age, self.A, self.B, self.c = age, A, B, c
        self.n_terms, self.horizon, self.samples, self.method = n_terms, horizon, samples, method
        self.expsum = expsum
        self.threads = threads

    def _contract(self) -> Contract:
        eq = KouParams(self.mu, self.sigma, self.lam, self.p, self.rho, self.rho_hat)
        return Contract(eq, self.F0, self.G0, self.r, self.m, self.m_d)

    def fit(self, X=None, y=None):
        self.contract_ = self._contract()
        if self.expsum is not None:
            self.expsum_ = self.expsum if isinstance(self.expsum, ExpSum) else ExpSum.from_json(self.expsum)
        else:
            gm = GompertzMakeham(self.age, self.A, self.B, self.c)
            self.expsum_ = fit_exponential_sum(gm, self.n_terms, self.horizon, self.samples, self.method)
        return self

    def predict(self, X):
        """``P(L > V)`` for each loss level ``V`` in ``X``."""
        check_is_fitted(self, "expsum_")
        V = np.atleast_1d(np.asarray(X, dtype=float)).ravel()
        return np.array([tail_probability(self.contract_, self.expsum_, v, self.threads) for v in V])

    def value_at_risk(self, p: float) -> float:
        check_is_fitted(self, "expsum_")
        return value_at_risk(self.contract_, self.expsum_, p, self.threads)

    def cte(self, p: float, var_p: float = None) -> float:
        check_is_fitted(self, "expsum_")
        return cte(self.contract_, self.expsum_, p, var_p, self.threads)

"""Brownian motion with drift (no jumps): Whittaker-function closed forms for ``I_{x,q}``."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from ._numeric import DoubleContext, MpContext, escalate, sum_tracked
from ._validation import check_complex, check_positive, check_real
from .exceptions import CancellationError, GammaPoleError, IntegerSpacingError, ParameterError
from .specfun import _gamma_ratio, _pfq

PERTURB_SCALE = 1e-9
ESCALATE_OUTER = 1e4
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class GbmDerived:
    """``nu = 2 mu / sigma^2``, ``eta = sqrt(8q/sigma^2 + nu^2)/2``, ``kappa = (1 - nu)/2``."""

    nu: complex
    eta: complex
    kappa: complex

    @classmethod
    def from_params(cls, q, mu, sigma) -> "GbmDerived":
        nu = 2.0 * mu / sigma**2
        eta = complex(8.0 * q / sigma**2 + nu**2) ** 0.5 / 2.0
        return cls(complex(nu), eta, complex((1.0 - nu) / 2.0))


def _whittaker_m(ctx, kappa, eta, z):
    kappa, eta, z = ctx.num(kappa), ctx.num(eta), ctx.num(z)
    f = _pfq(ctx, [eta - kappa + 0.5], [1 + 2 * eta], z)
    return ctx.exp(-z / 2 + (eta + 0.5) * ctx.log(z)) * f


def _whittaker_w(ctx, kappa, eta, z):
    kappa, eta = ctx.num(kappa), ctx.num(eta)
    if abs(complex(2 * eta) - round(complex(2 * eta).real)) < 1e-8:
        raise IntegerSpacingError(f"2*eta = {complex(2 * eta)!r} is (nearly) an integer")
    t1 = _gamma_ratio(ctx, [-2 * eta], [0.5 - eta - kappa]) * _whittaker_m(ctx, kappa, eta, z)
    t2 = _gamma_ratio(ctx, [2 * eta], [0.5 + eta - kappa]) * _whittaker_m(ctx, kappa, -eta, z)
    return sum_tracked(ctx, [t1, t2])


def _escalate(fn, *args):
    ctx = DoubleContext()
    value = fn(ctx, *args)
    if ctx.worst <= ESCALATE_OUTER and math.isfinite(abs(value)):
        return complex(value)
    return complex(escalate(lambda mp: fn(mp, *args), ctx.worst))


def whittaker_m(kappa, eta, z) -> complex:
    """``M_{kappa,eta}(z) = exp(-z/2) z^{eta+1/2} 1F1(eta-kappa+1/2; 1+2 eta; z)``."""
    return _escalate(_whittaker_m, check_complex(kappa, "kappa"), check_complex(eta, "eta"), check_complex(z, "z"))


def whittaker_w(kappa, eta, z) -> complex:
    """``W_{kappa,eta}(z)`` through its two-term connection with ``M_{kappa,+-eta}``.

    At integer ``2 eta`` the connection degenerates; since ``W`` is even and
    analytic in ``eta`` the value is then the average at ``eta +- 1e-8``, taken
    in 50-digit arithmetic.
    """
    kappa, eta, z = check_complex(kappa, "kappa"), check_complex(eta, "eta"), check_complex(z, "z")
    try:
        return _escalate(_whittaker_w, kappa, eta, z)
    except IntegerSpacingError:
        ctx = MpContext(50)
        delta = ctx.mp.mpf("1e-8")
        e = ctx.num(eta)
        w = _whittaker_w(ctx, kappa, e + delta, z) + _whittaker_w(ctx, kappa, e - delta, z)
        return complex(w / 2)


def _prefactor(ctx, x, q, sigma, d, y, ypow):
    """``q Gamma(eta-kappa+1/2)/Gamma(1+2 eta) x^kappa y^ypow exp((1/x - 1/y)/sigma^2)``."""
    eta, kappa = ctx.num(d.eta), ctx.num(d.kappa)
    g = _gamma_ratio(ctx, [eta - kappa + 0.5], [1 + 2 * eta])
    logs = kappa * ctx.log(x) + ypow * ctx.log(y) + (1.0 / x - 1.0 / y) / sigma**2
    return ctx.num(q) * g * ctx.exp(logs)


def _cdf(ctx, x, q, mu, sigma, y):
    d = GbmDerived.from_params(q, mu, sigma)
    eta, kappa = ctx.num(d.eta), ctx.num(d.kappa)
    zx, zy = 2.0 / (sigma**2 * x), 2.0 / (sigma**2 * y)
    if y >= x:
        pre = _prefactor(ctx, x, q, sigma, d, y, 1 - kappa) / (eta + kappa - 0.5)
        tail = pre * _whittaker_w(ctx, kappa, eta, zx) * _whittaker_m(ctx, kappa - 1, eta, zy)
        return 1 - tail
    pre = _prefactor(ctx, x, q, sigma, d, y, 1 - kappa)
    return pre * _whittaker_m(ctx, kappa, eta, zx) * _whittaker_w(ctx, kappa - 1, eta, zy)


def _te(ctx, x, q, mu, sigma, y, side):
    d = GbmDerived.from_params(q, mu, sigma)
    eta, kappa = ctx.num(d.eta), ctx.num(d.kappa)
    zx, zy = 2.0 / (sigma**2 * x), 2.0 / (sigma**2 * y)
    pre = _prefactor(ctx, x, q, sigma, d, y, 2 - kappa)
    if y >= x:
        bracket = sum_tracked(ctx, [
            _whittaker_m(ctx, kappa - 2, eta, zy) / (eta + kappa - 1.5),
            _whittaker_m(ctx, kappa - 1, eta, zy),
        ])
        above = pre / (eta + kappa - 0.5) * _whittaker_w(ctx, kappa, eta, zx) * bracket
        return above if side == "above" else _mean(q, mu, sigma, x) - above
    bracket = sum_tracked(ctx, [
        _whittaker_w(ctx, kappa - 1, eta, zy),
        -_whittaker_w(ctx, kappa - 2, eta, zy),
    ])
    below = pre * _whittaker_m(ctx, kappa, eta, zx) * bracket
    return below if side == "below" else _mean(q, mu, sigma, x) - below


def _mean(q, mu, sigma, x):
    """``E[I_{x,q}] = (q x + 1)/(q - psi(1))`` with ``psi(1) = mu + sigma^2/2``."""
    return (q * x + 1.0) / (q - (mu + 0.5 * sigma**2))


def _validated(x, q, mu, sigma, y):
    x = check_positive(x, "x")
    q = check_complex(q, "q")
    if q.real <= 0:
        raise ParameterError(f"q must have positive real part, got {q!r}")
    return x, q, check_real(mu, "mu"), check_positive(sigma, "sigma"), check_positive(y, "y")


def _with_retry(fn, x, q, *rest):
    try:
        return _escalate(fn, x, q, *rest)
    except (IntegerSpacingError, GammaPoleError) as exc:
        warnings.warn(f"{exc}; retrying with q perturbed by {PERTURB_SCALE:g}(1+|q|)", RuntimeWarning, stacklevel=3)
        return _escalate(fn, x, q + PERTURB_SCALE * (1 + abs(q)), *rest)


def _real(q, value, what):
    """Real part for real ``q`` (after checking the imaginary residual)."""
    if q.imag != 0.0:
        return value
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(value)):
        raise CancellationError(f"{what}: imaginary residual {value.imag:.3g} for real q", where="gbm")
    return value.real


def gbm_cdf(x, q, mu, sigma, y):
    """``P(I_{x,q} < y)`` for ``X_t = mu t + sigma W_t``; real for real ``q``."""
    x, q, mu, sigma, y = _validated(x, q, mu, sigma, y)
    return _real(q, _with_retry(_cdf, x, q, mu, sigma, y), "cdf")


def gbm_tail_expectation(x, q, mu, sigma, y, side: str = "below"):
    """``E[I 1{I > y}]`` (``side='above'``) or ``E[I 1{I < y}]`` (``side='below'``)."""
    x, q, mu, sigma, y = _validated(x, q, mu, sigma, y)
    if side not in ("above", "below"):
        raise ParameterError(f"side must be 'above' or 'below', got {side!r}")
    return _real(q, _with_retry(_te, x, q, mu, sigma, y, side), "tail expectation")


def gbm_mean(x, q, mu, sigma):
    """``E[I_{x,q}]``, finite when ``Re q > mu + sigma^2/2``."""
    q = check_complex(q, "q")
    value = complex(_mean(q, mu, sigma, x))
    return value.real if q.imag == 0.0 else value

"""Distribution of ``I_{x,q} = x exp(X_{e(q)}) + int_0^{e(q)} exp(X_s) ds`` for a Kou process.

Every quantity is a short sum of gamma products, hypergeometric series and
Meijer G-functions in the roots of ``psi(z) = q``.  Evaluation runs in doubles
first; when the outer sums cancel badly the same code is re-run in mpmath at a
working precision chosen from the observed cancellation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._numeric import DoubleContext, MpContext, escalate, sum_tracked
from ._validation import check_complex, check_positive
from .exceptions import (
    CancellationError,
    GammaPoleError,
    IntegerSpacingError,
    ParameterError,
)
from .kou import KouParams, RootSystem, solve_roots
from .specfun import (
    MeijerGSpec,
    _gamma_ratio,
    _meijer,
    _pfq,
    _pfq_regularized,
    integrate_vertical,
    meijer_terms,
)

ESCALATE_OUTER = 1e4
IMAG_TOL = 1e-10
PERTURB_SCALE = 1e-9
SPACING_DIGITS = 50


@dataclass(frozen=True)
class ExpFunctionalQuery:
    """``I_{x,q}`` for a Kou model; the root system is solved once and cached."""

    x: float
    q: complex
    params: KouParams
    roots: RootSystem = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "x", check_positive(self.x, "x"))
        q = check_complex(self.q, "q")
        if q.real <= 0.0:
            raise ParameterError(f"q must have positive real part, got {q!r}")
        object.__setattr__(self, "q", q)
        if self.roots is None:
            object.__setattr__(self, "roots", solve_roots(self.params, q))

    @property
    def real_q(self) -> bool:
        return self.q.imag == 0.0

    def perturbed(self) -> "ExpFunctionalQuery":
        dq = PERTURB_SCALE * (1.0 + abs(self.q))
        return ExpFunctionalQuery(self.x, self.q + dq, self.params)


# ------------------------------------------------------------------ plumbing


def _run(query, fn, *args):
    """Evaluate ``fn(ctx, V, x, *args)`` with escalation and one perturbation retry.

    Near-integer root spacing first moves the whole evaluation to
    ``SPACING_DIGITS`` digits; only if that still fails is ``q`` nudged.
    """
    try:
        try:
            return _escalating(query, fn, args)
        except IntegerSpacingError:
            return _escalating(query, fn, args, digits=SPACING_DIGITS)
    except (IntegerSpacingError, GammaPoleError) as exc:
        warnings.warn(
            f"{exc}; retrying with q perturbed by {PERTURB_SCALE:g}(1+|q|)", RuntimeWarning, stacklevel=3
        )
        return _escalating(query.perturbed(), fn, args)


def _escalating(query, fn, args, digits=None):
    ctx = DoubleContext() if digits is None else MpContext(digits)
    value = fn(ctx, query.roots.values(ctx), query.x, *args)
    budget = ESCALATE_OUTER if digits is None else 10.0 ** min(digits - 20, 300)
    if ctx.worst <= budget and math.isfinite(abs(value)):
        return complex(value)
    run = lambda mp: fn(mp, query.roots.values(mp), query.x, *args)  # noqa: E731
    return complex(escalate(run, ctx.worst, (digits or 0) + 10))


def _real(query, value, what):
    if not query.real_q:
        return value
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(value)):
        raise CancellationError(f"{what}: imaginary residual {value.imag:.3g} for real q")
    return value.real


def _arg(ctx, A, v):
    """``1/(A v)`` as the positive real the Meijer routine expects."""
    if ctx.is_mp:
        return 1 / (A.real * v)
    return 1.0 / (A.real * v)


def _sin_ratio(ctx, num, den):
    return ctx.sinpi(num) / ctx.sinpi(den)


def _psi_prime(V, z, zo):
    z1, z2, h1, h2, A, rho, rh, q = V
    return A * (z - zo) * (z + h1) * (z + h2) / ((z - rho) * (z + rh))


# ------------------------------------------------------------- Mellin pieces


def _m0(ctx, V, s):
    z1, z2, h1, h2, A, rho, rh, q = V
    s = ctx.num(s)
    g_s = [1 + z1 - s, 1 + z2 - s, rh + s], [1 + rho - s, h1 + s, h2 + s]
    g_1 = [z1, z2, rh + 1], [rho, h1 + 1, h2 + 1]
    num = [s] + g_s[0] + g_1[1]
    den = g_s[1] + g_1[0]
    return ctx.exp((1 - s) * ctx.log(A)) * _gamma_ratio(ctx, num, den)


def _mxq(ctx, V, x, s):
    z1, z2, h1, h2, A, rho, rh, q = V
    s = ctx.num(s)
    spec = MeijerGSpec(3, 3, [1 - s, 1, -rho, rh], [1 - s, h1, h2, -z1, -z2])
    terms = meijer_terms(
        ctx, spec, _arg(ctx, A, x),
        pre_num=[1 + z1 - s, 1 + z2 - s, rh + s],
        pre_den=[1 - s, 1 + rho - s, h1 + s, h2 + s],
    )
    return q * ctx.exp(-s * ctx.log(A)) * sum_tracked(ctx, terms)


def _coef(ctx, V, x, z, zo):
    """``(q x^z + z M_{x,q}(z)) / psi'(z)`` for ``z`` one of zeta1, zeta2."""
    q = V[7]
    return (q * ctx.power(x, z) + z * _mxq(ctx, V, x, z)) / _psi_prime(V, z, zo)


def _zeta_pairs(V):
    z1, z2 = V[0], V[1]
    return ((z1, z2), (z2, z1))


def _hat_pairs(V):
    h1, h2 = V[2], V[3]
    return ((h1, h2), (h2, h1))


def _hat_factor(ctx, V, x, h, ho):
    """``q (Ax)^{-h} sin(pi(rho_hat-h))/sin(pi(ho-h)) * 3Phi3(...|1/(Ax))``."""
    z1, z2, h1, h2, A, rho, rh, q = V
    phi = _pfq_regularized(
        ctx, [h, 1 + h + rho, 1 + h - rh], [1 + h - ho, 1 + h + z1, 1 + h + z2], _arg(ctx, A, x)
    )
    return q * ctx.exp(-h * ctx.log(A * x)) * _sin_ratio(ctx, rh - h, ho - h) * phi


# ----------------------------------------------------------- distributions


def _density_right(ctx, V, x, y):
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for z, zo in _zeta_pairs(V):
        f = _pfq(ctx, [1 + z, 1 + z - rho, 1 + z + rh], [1 + z - zo, 1 + z + h1, 1 + z + h2], -_arg(ctx, A, y))
        terms.append(_coef(ctx, V, x, z, zo) * ctx.power(y, -1 - z) * f)
    return sum_tracked(ctx, terms)


def _density_left(ctx, V, x, y):
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for h, ho in _hat_pairs(V):
        spec = MeijerGSpec(3, 1, [1 - rh, 1, 1 + rho], [1 + z1, 1 + z2, 1 - h, 1 - ho])
        terms.append(_hat_factor(ctx, V, x, h, ho) * _meijer(ctx, spec, _arg(ctx, A, y)))
    return sum_tracked(ctx, terms)


def _tail_right(ctx, V, x, y):
    """``P(I > y)`` for ``y >= x``."""
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for z, zo in _zeta_pairs(V):
        f = _pfq(ctx, [1 + z - rho, 1 + z + rh, z], [1 + z - zo, 1 + z + h1, 1 + z + h2], -_arg(ctx, A, y))
        terms.append(_coef(ctx, V, x, z, zo) / z * ctx.power(y, -z) * f)
    return sum_tracked(ctx, terms)


def _cdf_left(ctx, V, x, y):
    """``P(I < y)`` for ``y < x``."""
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for h, ho in _hat_pairs(V):
        spec = MeijerGSpec(3, 1, [-rh, rho, 1], [z1, z2, -h, -ho])
        terms.append(_hat_factor(ctx, V, x, h, ho) / A * _meijer(ctx, spec, _arg(ctx, A, y)))
    return sum_tracked(ctx, terms)


def _te_above(ctx, V, x, y):
    """``E[I 1{I > y}]`` for ``y >= x``."""
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for z, zo in _zeta_pairs(V):
        f = _pfq(
            ctx,
            [1 + z, 1 + z - rho, 1 + z + rh, z - 1],
            [1 + z - zo, 1 + z + h1, 1 + z + h2, z],
            -_arg(ctx, A, y),
        )
        terms.append(_coef(ctx, V, x, z, zo) / (z - 1) * ctx.power(y, 1 - z) * f)
    return sum_tracked(ctx, terms)


def _te_below(ctx, V, x, y):
    """``E[I 1{I < y}]`` for ``y < x``."""
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for h, ho in _hat_pairs(V):
        spec = MeijerGSpec(4, 1, [1 - rh, 1, 1 + rho, 3], [2, 1 + z1, 1 + z2, 1 - h, 1 - ho])
        terms.append(_hat_factor(ctx, V, x, h, ho) * y * y * _meijer(ctx, spec, _arg(ctx, A, y)))
    return sum_tracked(ctx, terms)


def _te(ctx, V, x, y, side):
    if y >= x:
        above = _te_above(ctx, V, x, y)
        return above if side == "above" else _mxq(ctx, V, x, 2) - above
    below = _te_below(ctx, V, x, y)
    return below if side == "below" else _mxq(ctx, V, x, 2) - below


# ------------------------------------------------------------------- public


def _in_strip(query, s) -> bool:
    lo = max(0.0, 1.0 - complex(query.roots.zeta_hat1).real)
    return lo < complex(s).real < 1.0


def mellin_m0(query: ExpFunctionalQuery, s) -> complex:
    """``M_{0,q}(s) = E[I_{0,q}^{s-1}]``."""
    s = check_complex(s, "s")
    return _run(query, lambda ctx, V, x, s: _m0(ctx, V, s), s)


def mellin_mxq(query: ExpFunctionalQuery, s) -> complex:
    """``M_{x,q}(s) = E[I_{x,q}^{s-1}]`` from its G^{3,3}_{4,5} representation.

    Outside ``max(0, 1 - zeta_hat1) < Re s < 1`` the same series is used as the
    analytic continuation (a warning is issued).
    """
    s = check_complex(s, "s")
    if not _in_strip(query, s):
        warnings.warn(f"s = {s} lies outside the Mellin strip; using the analytic continuation", RuntimeWarning)
    return _run(query, _mxq, s)


def phi_minus(query: ExpFunctionalQuery) -> float:
    return -complex(query.roots.zeta_hat1).real


def phi_plus(query: ExpFunctionalQuery) -> float:
    return complex(query.roots.zeta1).real


def _log_m0_vec(rs: RootSystem, s: np.ndarray) -> np.ndarray:
    z1, z2, h1, h2 = (complex(v).real for v in (rs.zeta1, rs.zeta2, rs.zeta_hat1, rs.zeta_hat2))
    A, rho, rh = rs.A, rs.rho, rs.rho_hat
    lg = special.loggamma
    log_g = lambda u: (  # noqa: E731
        lg(1 + z1 - u) + lg(1 + z2 - u) + lg(rh + u) - lg(1 + rho - u) - lg(h1 + u) - lg(h2 + u)
    )
    return (1 - s) * math.log(A) + lg(s) + log_g(s) - log_g(np.ones_like(s))


def mellin_contour_check(query: ExpFunctionalQuery, w: float, c: float) -> complex:
    """``M_{x,q}(1+w)`` by quadrature of the general contour representation.

    Uses only ``M_{0,q}`` and the line ``Re z = c``; it shares no Meijer-G code
    with :func:`mellin_mxq`.
    """
    if not query.real_q:
        raise ParameterError("the contour representation is stated for real q > 0")
    lo = max(-1.0, phi_minus(query))
    if not lo < w < 0.0:
        raise ParameterError(f"w must lie in ({lo}, 0), got {w}")
    if not 0.0 < c < -w:
        raise ParameterError(f"c must lie in (0, {-w}), got {c}")
    rs, x, q = query.roots, query.x, query.q.real

    def integrand(t):
        z = c + 1j * np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            log_num = -z * math.log(x) - _log_m0_vec(rs, -z)
            val = np.exp(log_num) / (z * np.sin(np.pi * z) * np.sin(np.pi * (w + z)))
        return np.where(np.isfinite(val), val, 0.0)

    integral = integrate_vertical(integrand, rel_tol=1e-12)
    m0 = np.exp(_log_m0_vec(rs, np.array([1.0 + w], dtype=complex)))[0]
    return complex(q * math.sin(math.pi * w) * m0 * (-0.5) * integral)


def density(query: ExpFunctionalQuery, y: float):
    """Density of ``I_{x,q}`` at ``y``; the two one-sided limits are averaged at ``y = x``."""
    y = check_positive(y, "y")
    x = query.x
    if y > x:
        v = _run(query, _density_right, y)
    elif y < x:
        v = _run(query, _density_left, y)
    else:
        v = 0.5 * (_run(query, _density_right, y) + _run(query, _density_left, y))
    return _real(query, v, "density")


def cdf(query: ExpFunctionalQuery, y: float):
    """``P(I_{x,q} < y)``; complex (analytic continuation) when ``q`` is complex."""
    y = check_positive(y, "y")
    if y >= query.x:
        v = 1.0 - _run(query, _tail_right, y)
    else:
        v = _run(query, _cdf_left, y)
    v = _real(query, v, "cdf")
    if query.real_q and not -IMAG_TOL <= v <= 1.0 + IMAG_TOL:
        raise CancellationError(f"cdf value {v!r} outside [0, 1]")
    return v


def tail_probability(query: ExpFunctionalQuery, y: float):
    """``P(I_{x,q} > y)``."""
    y = check_positive(y, "y")
    if y >= query.x:
        return _real(query, _run(query, _tail_right, y), "tail probability")
    return 1.0 - cdf(query, y)


def tail_expectation(query: ExpFunctionalQuery, y: float, side: str = "below"):
    """``E[I 1{I > y}]`` (``side='above'``) or ``E[I 1{I < y}]`` (``side='below'``)."""
    y = check_positive(y, "y")
    if side not in ("above", "below"):
        raise ParameterError(f"side must be 'above' or 'below', got {side!r}")
    if side == "above" and complex(query.roots.zeta1).real <= 1.0:
        warnings.warn("Re(zeta1) <= 1: E[I] is infinite, result is an analytic continuation", RuntimeWarning)
    return _real(query, _run(query, _te, y, side), "tail expectation")


# --------------------------------------------------- integral identity checks


def _i1_closed(ctx, V, x, s):
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for h, ho in _hat_pairs(V):
        spec = MeijerGSpec(4, 1, [1 - rh, 1, 1 + rho, s + 1], [s, 1 + z1, 1 + z2, 1 - h, 1 - ho])
        g = _meijer(ctx, spec, _arg(ctx, A, x))
        terms.append(_hat_factor(ctx, V, x, h, ho) * ctx.power(x, s) * g)
    return sum_tracked(ctx, terms)


def _i2_closed(ctx, V, x, s):
    z1, z2, h1, h2, A, rho, rh, q = V
    terms = []
    for z, zo in _zeta_pairs(V):
        f = _pfq(
            ctx,
            [1 + z - s, 1 + z, 1 + z - rho, 1 + z + rh],
            [2 + z - s, 1 + z - zo, 1 + z + h1, 1 + z + h2],
            -_arg(ctx, A, x),
        )
        terms.append(_coef(ctx, V, x, z, zo) * ctx.power(x, s - 1 - z) / (1 + z - s) * f)
    return sum_tracked(ctx, terms)


def _closed_residual(ctx, V, x, s):
    m = _mxq(ctx, V, x, s)
    diff = _i1_closed(ctx, V, x, s) + _i2_closed(ctx, V, x, s) - m
    return diff / (1 + abs(m))


class _Expanded:
    """The hypergeometric building blocks of the expanded identity."""

    def __init__(self, ctx, V, x, s):
        self.ctx = ctx
        z1, z2, h1, h2, A, rho, rh, q = V
        self.V, self.x, self.s = V, x, ctx.num(s)
        self.Ax = A * x
        self.z = _arg(ctx, A, x)

    def phi(self, a, b, sign=1):
        return _pfq_regularized(self.ctx, a, b, sign * self.z)

    def f1(self, s):
        z1, z2, h1, h2, A, rho, rh, q = self.V
        return self.phi([1, 1 - s, 2 + rho - s, 2 - rh - s], [2 - s - h1, 2 - s - h2, 2 - s + z1, 2 - s + z2])

    def f_hat(self, h, ho):
        z1, z2, h1, h2, A, rho, rh, q = self.V
        return self.phi([h, 1 + h + rho, 1 + h - rh], [1 + h - ho, 1 + h + z1, 1 + h + z2])

    def f_zeta(self, z, zo):
        """``f6`` (z = zeta1) and ``f7`` (z = zeta2)."""
        z1, z2, h1, h2, A, rho, rh, q = self.V
        s = self.s
        return self.phi([1 + z + rh, 1 + z, 1 + z - rho, 1 + z - s], [2 + z - s, 1 + z - zo, 1 + z + h1, 1 + z + h2], -1)

    def f_hat_neg(self, h, ho):
        """``f8`` (h = zeta_hat1) and ``f9`` (h = zeta_hat2)."""
        z1, z2, h1, h2, A, rho, rh, q = self.V
        s = self.s
        return self.phi([1 + rh - h, 1 - h, 1 - rho - h, 1 - s - h], [2 - h - s, 1 - h - z1, 1 - h - z2, 1 + ho - h], -1)

    def gamma_s(self, s):
        z1, z2, h1, h2, A, rho, rh, q = self.V
        return _gamma_ratio(self.ctx, [1 + z1 - s, 1 + z2 - s, rh + s], [1 - s, 1 + rho - s, h1 + s, h2 + s])

    def a_coeffs(self, s):
        ctx = self.ctx
        z1, z2, h1, h2, A, rho, rh, q = self.V
        base = ctx.pi * q * ctx.exp(-s * ctx.log(A)) * self.gamma_s(s)
        a1 = -base * ctx.sinpi(rh + s) / (ctx.sinpi(h1 + s) * ctx.sinpi(h2 + s)) * ctx.exp((s - 1) * ctx.log(self.Ax))
        a2 = base * ctx.sinpi(rh - h1) / (ctx.sinpi(s + h1) * ctx.sinpi(h2 - h1)) * ctx.exp(-h1 * ctx.log(self.Ax))
        a3 = base * ctx.sinpi(rh - h2) / (ctx.sinpi(s + h2) * ctx.sinpi(h1 - h2)) * ctx.exp(-h2 * ctx.log(self.Ax))
        return a1, a2, a3

    def d_coeffs(self, h, ho):
        """``(d1, d2, d3, d4)`` for ``h = zeta_hat1``; ``(e1, ..., e4)`` for ``h = zeta_hat2``."""
        ctx = self.ctx
        z1, z2, h1, h2, A, rho, rh, q = self.V
        s, lax = self.s, ctx.log(self.Ax)
        sp = ctx.sinpi
        d1 = -sp(z1) * sp(rho - z1) / (sp(z2 - z1) * sp(h + z1)) * ctx.exp((-z1 - 1) * lax)
        d2 = -sp(z2) * sp(rho - z2) / (sp(z1 - z2) * sp(h + z2)) * ctx.exp((-z2 - 1) * lax)
        d3 = -sp(h) * sp(rho + h) / (sp(z1 + h) * sp(z2 + h)) * ctx.exp((h - 1) * lax)
        d4 = _gamma_ratio(ctx, [1 + z1 - s, 1 + z2 - s, 1 - h - s, s + rh], [s + ho, 1 - s, 1 + rho - s])
        return d1, d2, d3, d4 * ctx.exp(-s * lax)

    def h_coeff(self, h, ho):
        ctx = self.ctx
        A, rh, q = self.V[4], self.V[6], self.V[7]
        return q * ctx.exp(-h * ctx.log(A)) * ctx.power(self.x, self.s - h) * _sin_ratio(ctx, rh - h, ho - h)

    def g_coeff(self, z, zo):
        ctx = self.ctx
        z1, z2, h1, h2, A, rho, rh, q = self.V
        s = self.s
        gr = _gamma_ratio(
            ctx,
            [2 + z - s, 1 + z - zo, 1 + z + h1, 1 + z + h2],
            [1 + z + rh, 1 + z, 1 + z - rho, 1 + z - s],
        )
        return ctx.power(self.x, s - 1 - z) / (1 + z - s) * gr / _psi_prime(self.V, z, zo)


def _expanded_parts(ctx, V, x, s):
    """``(I1, I2, M)`` assembled from the expanded products of hypergeometric functions."""
    z1, z2, h1, h2, A, rho, rh, q = V
    e = _Expanded(ctx, V, x, s)
    s = e.s
    f1, f2, f3 = e.f1(s), e.f_hat(h1, h2), e.f_hat(h2, h1)
    f4, f5 = e.f1(z1), e.f1(z2)
    f6, f7 = e.f_zeta(z1, z2), e.f_zeta(z2, z1)
    f8, f9 = e.f_hat_neg(h1, h2), e.f_hat_neg(h2, h1)
    a1, a2, a3 = e.a_coeffs(s)
    b1, b2, b3 = e.a_coeffs(z1)
    c1, c2, c3 = e.a_coeffs(z2)
    d1, d2, d3, d4 = e.d_coeffs(h1, h2)
    e1, e2, e3, e4 = e.d_coeffs(h2, h1)
    hh1, hh2 = e.h_coeff(h1, h2), e.h_coeff(h2, h1)
    g1, g2 = e.g_coeff(z1, z2), e.g_coeff(z2, z1)
    i1 = sum_tracked(ctx, [
        hh1 * d4 * f2, hh2 * e4 * f3, hh1 * d1 * f2 * f6, hh1 * d2 * f2 * f7,
        hh1 * d3 * f2 * f8, hh2 * e1 * f3 * f6, hh2 * e2 * f3 * f7, hh2 * e3 * f3 * f9,
    ])
    i2 = sum_tracked(ctx, [
        q * ctx.power(x, z1) * g1 * f6, q * ctx.power(x, z2) * g2 * f7,
        z1 * b1 * g1 * f4 * f6, z1 * b2 * g1 * f2 * f6, z1 * b3 * g1 * f3 * f6,
        z2 * c1 * g2 * f5 * f7, z2 * c2 * g2 * f2 * f7, z2 * c3 * g2 * f3 * f7,
    ])
    m = sum_tracked(ctx, [a1 * f1, a2 * f2, a3 * f3])
    return i1, i2, m


def _expanded_residual(ctx, V, x, s):
    i1, i2, m = _expanded_parts(ctx, V, x, s)
    return (i1 + i2 - m) / (1 + abs(m))


def appendix_b_parts(query: ExpFunctionalQuery, s, form: str = "expanded"):
    """``(I1(s), I2(s), M_{x,q}(s))``, the Mellin transforms of the density on ``(0, x)``, ``(x, inf)`` and in total."""
    s = check_complex(s, "s")
    if form == "expanded":
        parts = [lambda c, V, x, s, i=i: _expanded_parts(c, V, x, s)[i] for i in range(3)]
    elif form == "closed":
        parts = [_i1_closed, _i2_closed, _mxq]
    else:
        raise ParameterError(f"form must be 'expanded' or 'closed', got {form!r}")
    return tuple(_run(query, p, s) for p in parts)


def appendix_b_residual(query: ExpFunctionalQuery, s, form: str = "expanded") -> float:
    """``|I1(s) + I2(s) - M_{x,q}(s)| / (1 + |M_{x,q}(s)|)``.

    ``form='expanded'`` builds every Meijer G from its hypergeometric expansion
    and sums the resulting products; ``form='closed'`` uses the G-functions and
    ``4F4`` sums directly.
    """
    s = check_complex(s, "s")
    if not _in_strip(query, s):
        warnings.warn(f"s = {s} lies outside the strip where the identity is proved", RuntimeWarning)
    fn = _expanded_residual if form == "expanded" else _closed_residual
    if form not in ("expanded", "closed"):
        raise ParameterError(f"form must be 'expanded' or 'closed', got {form!r}")
    return abs(_run(query, fn, s))


def _h_terms(ctx, V, s, z):
    z1, z2, h1, h2, A, rho, rh, q = V
    s = ctx.num(s)
    al = [z1, z2, -h1, -h2, s - 1]
    terms = []
    for i, ai in enumerate(al):
        others = [aj for j, aj in enumerate(al) if j != i]
        den = ctx.num(1)
        for aj in others:
            den *= ai - aj
        lhs = _pfq(ctx, [1 + ai - rho, 1 + ai + rh, 1 + ai, 1 + ai - s], [1 + ai - aj for aj in others], -z)
        rhs = _pfq(ctx, [1 + rho - ai, 1 - rh - ai, -ai, s - ai], [1 + aj - ai for aj in others], z)
        terms.append((ai - rho) * (ai + rh) / den * lhs * rhs)
    return terms


def h_identity_residual(query: ExpFunctionalQuery, s, z: float) -> float:
    """Relative size ``|H| / sum|H_i|`` of the five-term ``4F4 x 4F4`` identity at argument ``z``.

    ``z`` plays the role of ``1/(Ax)``; the identity holds for every real ``z != 0``.
    """
    s = check_complex(s, "s")

    def fn(ctx, V, x, s, z):
        terms = _h_terms(ctx, V, s, ctx.num(z))
        # the identity sums to zero, so its cancellation is the quantity measured
        total = sum_tracked(ctx, terms, record=False)
        scale = sum(abs(t) for t in terms)
        return total / scale

    return abs(_run(query, fn, s, float(z)))

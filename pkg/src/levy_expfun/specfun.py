"""Complex special functions: gamma products, hypergeometric series, Meijer G.

Conventions
-----------
``gamma_ratio`` evaluates ``prod Gamma(a_i) / prod Gamma(b_j)`` in log space.
Identical arguments in numerator and denominator are cancelled before any
gamma function is evaluated, so products such as ``Gamma(1 - s) / Gamma(1 - s)``
stay finite at ``s = 1``.  A pole in the denominator contributes a zero
factor, a pole in the numerator raises :class:`GammaPoleError`.

The Meijer G-function uses the Mellin-Barnes convention

    G(x) = 1/(2 pi i) * int_{lam + iR} prod_{j<=m} Gamma(b_j + s)
           prod_{j<=n} Gamma(1 - a_j - s) / (prod_{j>m} Gamma(1 - b_j - s)
           prod_{j>n} Gamma(a_j + s)) * x**(-s) ds,

which coincides with the classical definition after ``s -> -s``.

All public functions accept an optional ``ctx`` (see ``_numeric``); without
one they compute in doubles and return Python ``complex``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

from ._numeric import DoubleContext, MpContext, escalate, is_nonpositive_integer, sum_tracked
from .exceptions import (
    CancellationError,
    ConditionError,
    ConvergenceError,
    GammaPoleError,
    IntegerSpacingError,
)

MAX_TERMS = 100_000
SMALL_RUN = 8
# max|term|/|sum| above which a double-precision series is re-summed in mp
ESCALATE_RATIO = 1e4
GIVE_UP_RATIO = 1e100
INTEGER_SPACING_TOL = 1e-8
# the public meijer_g is not on any hot path, so it escalates eagerly
PUBLIC_MEIJER_RATIO = 10.0


@dataclass(frozen=True)
class GammaRatioSpec:
    numerators: tuple = ()
    denominators: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(self.numerators))
        object.__setattr__(self, "denominators", tuple(self.denominators))


@dataclass(frozen=True)
class MeijerGSpec:
    """Parameters of ``G^{m,n}_{p,q}(a; b | x)``."""

    m: int
    n: int
    a: tuple = field(default=())
    b: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValueError(
                f"need 0 <= m <= q and 0 <= n <= p, got m={self.m}, n={self.n}, p={self.p}, q={self.q}"
            )

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    def shifted(self, c) -> "MeijerGSpec":
        """Parameters of ``x**c * G(x)``."""
        return MeijerGSpec(self.m, self.n, [ai + c for ai in self.a], [bj + c for bj in self.b])

    def inverted(self) -> "MeijerGSpec":
        """Parameters ``G'`` with ``G(x) = G'(1/x)``."""
        return MeijerGSpec(self.n, self.m, [1 - bj for bj in self.b], [1 - ai for ai in self.a])

    def reduced(self) -> "MeijerGSpec":
        """Drop coinciding (a_j, b_k) pairs that cancel in the Mellin-Barnes integrand."""
        m, n, a, b = self.m, self.n, list(self.a), list(self.b)
        changed = True
        while changed:
            changed = False
            # a_j (j <= n) equal to b_k (k > m): n and the orders drop
            for j in range(n):
                for k in range(m, len(b)):
                    if a[j] == b[k]:
                        del a[j], b[k]
                        n -= 1
                        changed = True
                        break
                if changed:
                    break
            if changed:
                continue
            # b_k (k <= m) equal to a_j (j > n): m and the orders drop
            for k in range(m):
                for j in range(n, len(a)):
                    if b[k] == a[j]:
                        del a[j], b[k]
                        m -= 1
                        changed = True
                        break
                if changed:
                    break
        return MeijerGSpec(m, n, a, b)

    def b_min(self) -> float:
        return min((complex(bj).real for bj in self.b[: self.m]), default=math.inf)

    def a_max(self) -> float:
        return max((complex(aj).real for aj in self.a[: self.n]), default=-math.inf)

    def condition_a(self) -> bool:
        return self.a_max() - 1.0 < self.b_min()

    def condition_b(self) -> bool:
        return self.p + self.q < 2 * (self.m + self.n)


def _ctx(ctx):
    return DoubleContext() if ctx is None else ctx


def _out(ctx_given, value):
    return complex(value) if ctx_given is None else value


# ---------------------------------------------------------------- gamma family


def log_gamma(z, ctx=None):
    """Principal branch of ``log Gamma(z)``."""
    c = _ctx(ctx)
    return _out(ctx, c.loggamma(c.num(z)))


def _is_pole(ctx, z) -> bool:
    if ctx.is_mp:
        return z.imag == 0 and z.real <= 0 and z.real == ctx.mp.floor(z.real)
    return is_nonpositive_integer(z)


def _cancel(num, den):
    num = list(num)
    den = list(den)
    keep = []
    for z in num:
        for i, w in enumerate(den):
            if z == w:
                del den[i]
                break
        else:
            keep.append(z)
    return keep, den


def _log_gamma_ratio(ctx, num, den):
    """Complex log of the gamma ratio after cancellation; ``None`` if it vanishes."""
    num, den = _cancel([ctx.num(z) for z in num], [ctx.num(z) for z in den])
    for z in num:
        if _is_pole(ctx, z):
            raise GammaPoleError(complex(z))
    for w in den:
        if _is_pole(ctx, w):
            return None
    total = ctx.num(0)
    for z in num:
        total += ctx.loggamma(z)
    for w in den:
        total -= ctx.loggamma(w)
    return total


def _gamma_ratio(ctx, num, den):
    lg = _log_gamma_ratio(ctx, num, den)
    if lg is None:
        return ctx.num(0)
    return ctx.exp(lg)


def gamma_ratio(spec, ctx=None):
    """``prod Gamma(numerators) / prod Gamma(denominators)``.

    ``spec`` is a :class:`GammaRatioSpec` or a ``(numerators, denominators)`` pair.
    """
    if not isinstance(spec, GammaRatioSpec):
        spec = GammaRatioSpec(*spec)
    c = _ctx(ctx)
    return _out(ctx, _gamma_ratio(c, spec.numerators, spec.denominators))


def pochhammer(a, k: int, ctx=None):
    """Rising factorial ``(a)_k``; direct product up to k = 64, log-gamma beyond."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    c = _ctx(ctx)
    a = c.num(a)
    if k <= 64:
        out = c.num(1)
        for i in range(int(k)):
            out *= a + i
        return _out(ctx, out)
    if _is_pole(c, a) or _is_pole(c, a + k):
        # terminating or pole-crossing products are finite; fall back to the product
        out = c.num(1)
        for i in range(int(k)):
            out *= a + i
        return _out(ctx, out)
    return _out(ctx, _gamma_ratio(c, [a + k], [a]))


# ------------------------------------------------------- hypergeometric series


class _DoubleRange(Exception):
    """A double-precision series left the floating-point range."""


def _series(ctx, a, b, z, k0, first):
    """Sum ``sum_{k>=k0} t_k`` with ``t_{k+1}/t_k = prod(a+k)/prod(b+k) * z/(k+1)``.

    Returns ``(value, max|t_k|)``, the maximum in the context's own number type
    so that mp sums far outside the double range are still measured.
    """
    eps = ctx.eps * 0.5
    terms = []
    partial = ctx.num(0)
    biggest = 0
    run = 0
    term = first
    k = k0
    while True:
        terms.append(term)
        partial += term
        mag = abs(term)
        if not ctx.is_mp and not math.isfinite(mag):
            raise _DoubleRange()
        biggest = max(biggest, mag)
        if mag == 0:
            break
        if mag <= eps * abs(partial):
            run += 1
            if run >= SMALL_RUN:
                break
        else:
            run = 0
        ratio_num = ctx.num(1)
        for ai in a:
            ratio_num *= ai + k
        ratio_den = ctx.num(k + 1)
        for bj in b:
            ratio_den *= bj + k
        if ratio_den == 0:
            raise GammaPoleError(complex(ratio_den), where="hypergeometric denominator")
        term = term * ratio_num / ratio_den * z
        k += 1
        if k - k0 > MAX_TERMS:
            raise ConvergenceError(f"hypergeometric series did not converge in {MAX_TERMS} terms")
    return ctx.fsum(terms), biggest


def _with_escalation(ctx, fn, a, b, z):
    try:
        value, biggest = fn(ctx, a, b, z)
    except _DoubleRange:
        # terms overflow a double; an mp pass has no exponent limit, and an
        # infinite result here makes the caller re-run its whole formula in mp
        hi = MpContext(30)
        value = _with_escalation(hi, fn, [hi.num(v) for v in a], [hi.num(v) for v in b], hi.num(z))
        return ctx.num(complex(value))
    mag = abs(value)
    ratio = float(biggest / mag) if mag > 0 else (math.inf if biggest > 0 else 1.0)
    if ctx.is_mp:
        limit = 10.0 ** min(ctx.dps - 20, 300)
    else:
        limit = ESCALATE_RATIO
    if ratio <= limit:
        ctx.note(ratio)
        return value
    if ratio > GIVE_UP_RATIO:
        raise CancellationError(f"hypergeometric cancellation ratio {ratio:.3g} exceeds budget")
    extra = int(math.ceil(math.log10(ratio))) + 12
    hi = ctx.raised(extra) if ctx.is_mp else MpContext(16 + extra)
    value = _with_escalation(hi, fn, [hi.num(v) for v in a], [hi.num(v) for v in b], hi.num(z))
    return ctx.num(complex(value)) if not ctx.is_mp else ctx.num(value)


def _pfq_raw(ctx, a, b, z):
    for bj in b:
        if _is_pole(ctx, bj):
            # a terminating numerator that stops before the pole keeps F finite
            stops = [
                ai for ai in a
                if _is_pole(ctx, ai) and (-ai.real) < (-bj.real)
            ]
            if not stops:
                raise GammaPoleError(complex(bj), where="hypergeometric denominator")
    return _series(ctx, a, b, z, 0, ctx.num(1))


def _lreg_raw(ctx, a, b, z):
    """``sum_k prod (a)_k / prod Gamma(b + k) z^k / k!`` (lower-regularized)."""
    k0 = 0
    for bj in b:
        if _is_pole(ctx, bj):
            k0 = max(k0, int(1 - round(float(bj.real))))
    if k0 > 0 and z == 0:
        return ctx.num(0), 0.0
    first = ctx.num(1)
    for ai in a:
        for i in range(k0):
            first *= ai + i
    lg = ctx.num(0)
    for bj in b:
        lg -= ctx.loggamma(bj + k0)
    lg -= ctx.loggamma(ctx.num(k0 + 1))
    first *= ctx.exp(lg)
    if k0:
        first *= z**k0
    return _series(ctx, a, b, z, k0, first)


def _pfq(ctx, a, b, z):
    a = [ctx.num(v) for v in a]
    b = [ctx.num(v) for v in b]
    return _with_escalation(ctx, _pfq_raw, a, b, ctx.num(z))


def _lreg(ctx, a, b, z):
    a = [ctx.num(v) for v in a]
    b = [ctx.num(v) for v in b]
    return _with_escalation(ctx, _lreg_raw, a, b, ctx.num(z))


def _pfq_regularized(ctx, a, b, z):
    a = [ctx.num(v) for v in a]
    for ai in a:
        if _is_pole(ctx, ai):
            raise GammaPoleError(complex(ai), where="regularized hypergeometric numerator")
    pre = _gamma_ratio(ctx, a, [])
    return pre * _lreg(ctx, a, b, z)


def _check_pq(a, b):
    if len(a) > len(b) + 1:
        raise ValueError("only p <= q + 1 series are supported (the series diverges otherwise)")


def hyper_pfq(a: Sequence, b: Sequence, z, ctx=None):
    """Generalized hypergeometric ``pFq(a; b; z)`` by direct series summation."""
    _check_pq(a, b)
    c = _ctx(ctx)
    return _out(ctx, _pfq(c, a, b, z))


def hyper_pfq_regularized(a: Sequence, b: Sequence, z, ctx=None):
    """Regularized ``pPhiq = Gamma[a; b] * pFq``, finite at non-positive integer ``b_j``."""
    _check_pq(a, b)
    c = _ctx(ctx)
    return _out(ctx, _pfq_regularized(c, a, b, z))


# ------------------------------------------------------------------- Meijer G


def _near_integer(d, tol=INTEGER_SPACING_TOL) -> bool:
    d = complex(d)
    return abs(d - round(d.real)) < tol


def spacing_tolerance(ctx) -> float:
    """Closest admissible distance of ``b_j - b_k`` to an integer in ``ctx``.

    Near-integer spacing makes the series terms grow like ``1/distance`` and
    cancel; multiprecision contexts absorb that, so their threshold is tighter.
    """
    if ctx.is_mp:
        return 10.0 ** (-ctx.dps / 2)
    return INTEGER_SPACING_TOL


def check_spacing(spec: MeijerGSpec, tol=INTEGER_SPACING_TOL) -> None:
    bs = spec.b[: spec.m]
    for j in range(len(bs)):
        for k in range(j + 1, len(bs)):
            if _near_integer(bs[j] - bs[k], tol):
                raise IntegerSpacingError(
                    f"b[{j}] - b[{k}] = {complex(bs[j] - bs[k])!r} is within {tol:g} of an integer"
                )


def meijer_terms(ctx, spec: MeijerGSpec, x, pre_num=(), pre_den=()):
    """The m hypergeometric terms of the series form of ``G(x)``.

    ``pre_num``/``pre_den`` are gamma arguments of an outer prefactor that are
    merged into every term before evaluation (so pole pairs cancel exactly).
    Only valid for ``p < q`` or ``p == q`` with ``x < 1``.
    """
    m, n, p, q = spec.m, spec.n, spec.p, spec.q
    check_spacing(spec, spacing_tolerance(ctx))
    a = [ctx.num(v) for v in spec.a]
    b = [ctx.num(v) for v in spec.b]
    xx = ctx.num(x)
    sign = -1 if (p - m - n) % 2 else 1
    out = []
    for k in range(m):
        bk = b[k]
        num = list(pre_num) + [b[j] - bk for j in range(m) if j != k]
        num += [1 + bk - a[j] for j in range(n)]
        num += [1 + bk - b[j] for j in range(q) if j != k]
        den = list(pre_den) + [1 + bk - b[j] for j in range(m, q)]
        den += [a[j] - bk for j in range(n, p)]
        coef = _log_gamma_ratio(ctx, num, den)
        if coef is None:
            out.append(ctx.num(0))
            continue
        upper = [1 + bk - a[j] for j in range(p)]
        lower = [1 + bk - b[j] for j in range(q) if j != k]
        series = _lreg(ctx, upper, lower, sign * xx)
        out.append(ctx.exp(coef + bk * ctx.log(xx)) * series)
    return out


def _meijer(ctx, spec: MeijerGSpec, x):
    x = float(x) if not ctx.is_mp else x
    if spec.p > spec.q or (spec.p == spec.q and abs(complex(x)) > 1):
        return _meijer(ctx, spec.inverted(), 1 / ctx.num(x) if ctx.is_mp else 1.0 / x)
    if spec.m == 0:
        # all residues sit to the left of no contour: the integral closes to zero
        return ctx.num(0)
    return sum_tracked(ctx, meijer_terms(ctx, spec, x))


def meijer_g(spec: MeijerGSpec, x, ctx=None):
    """Meijer G-function at ``x > 0`` via its finite sum of hypergeometric series.

    ``p > q`` (and ``p == q`` with ``x > 1``) are mapped through the inversion
    ``G(a; b | x) = G'(1 - b; 1 - a | 1/x)``.
    """
    if float(np.real(complex(x))) <= 0.0 or complex(x).imag != 0.0:
        raise ValueError("meijer_g is defined here for positive real x only")
    if ctx is not None:
        return _meijer(ctx, spec, x)
    c = DoubleContext()
    value = _meijer(c, spec, x)
    if c.worst <= PUBLIC_MEIJER_RATIO and math.isfinite(abs(value)):
        return complex(value)
    return complex(escalate(lambda mp: _meijer(mp, spec, mp.num(x)), c.worst))


def _contour_integrand(spec: MeijerGSpec, x: float, lam: float, t: np.ndarray) -> np.ndarray:
    s = lam + 1j * t
    m, n = spec.m, spec.n
    lg = np.zeros_like(s)
    for bj in spec.b[:m]:
        lg += special.loggamma(complex(bj) + s)
    for aj in spec.a[:n]:
        lg += special.loggamma(1 - complex(aj) - s)
    for bj in spec.b[m:]:
        lg -= special.loggamma(1 - complex(bj) - s)
    for aj in spec.a[n:]:
        lg -= special.loggamma(complex(aj) + s)
    val = np.exp(lg - s * math.log(x)) / (2.0 * math.pi)
    return np.where(np.isfinite(val), val, 0.0)


def meijer_g_contour(spec: MeijerGSpec, x, lam=None, *, rel_tol=1e-13):
    """Meijer G by direct quadrature of the Mellin-Barnes integral on ``Re s = lam``.

    Independent of :func:`meijer_g`; requires conditions A and B.
    """
    x = float(x)
    if x <= 0:
        raise ValueError("x must be positive")
    if not spec.condition_a():
        raise ConditionError("condition A (a_max - 1 < b_min) violated")
    if not spec.condition_b():
        raise ConditionError("condition B (p + q < 2(m + n)) violated")
    lo, hi = -spec.b_min(), 1.0 - spec.a_max()
    if lam is None:
        if math.isfinite(lo) and math.isfinite(hi):
            lam = 0.5 * (lo + hi)
        elif math.isfinite(lo):
            lam = lo + 0.5
        elif math.isfinite(hi):
            lam = hi - 0.5
        else:
            lam = 0.0
    elif not (lo < lam < hi):
        raise ConditionError(f"lam={lam} outside ({lo}, {hi})")

    f = lambda t: _contour_integrand(spec, x, lam, np.asarray(t, dtype=float))  # noqa: E731
    return integrate_vertical(f, rel_tol=rel_tol)


def integrate_vertical(f, *, rel_tol=1e-13, t_start=4.0, t_max=4096.0):
    """``int_R f(t) dt`` for a vectorized, exponentially decaying complex ``f``.

    The range ``[-T, T]`` doubles until ``|f(+-T)|`` drops below 1e-18 of the
    observed peak; the integral is then summed over unit Gauss-Kronrod panels.
    """
    peak = float(np.max(np.abs(f(np.linspace(-t_start, t_start, 81)))))
    T = t_start
    while True:
        tail = float(np.max(np.abs(f(np.array([-T, T])))))
        if tail < 1e-18 * peak or T > t_max:
            break
        grid = np.linspace(T, 2 * T, 33)
        peak = max(peak, float(np.max(np.abs(f(np.concatenate([grid, -grid]))))))
        T *= 2.0
    if T > t_max:
        raise ConvergenceError("integrand does not decay along the vertical line")

    edges = np.linspace(-T, T, int(2 * T) + 1)
    floor = 1e-18 * peak
    total = 0j
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo_e, hi_e in zip(edges[:-1], edges[1:]):
            re, e1 = integrate.quad(lambda t: f(t).real, lo_e, hi_e, epsabs=floor, epsrel=2e-14, limit=200)
            im, e2 = integrate.quad(lambda t: f(t).imag, lo_e, hi_e, epsabs=floor, epsrel=2e-14, limit=200)
            total += complex(re, im)
            err += e1 + e2
    # quad error estimates are pessimistic; this gate only catches gross failure
    if err > 100.0 * max(rel_tol * abs(total), 1e-16 * peak):
        raise ConvergenceError(f"contour quadrature error estimate {err:.3g} too large (value {abs(total):.3g}, peak {peak:.3g})")
    return total

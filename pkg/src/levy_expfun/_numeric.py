"""Scalar arithmetic backends.

Every special function in the package is written once against a tiny
context interface (``num``, ``loggamma``, ``exp``, ``log``, ``sinpi``, ...)
and can therefore run either in hardware complex doubles or in mpmath
multiprecision.  A context also records the worst cancellation ratio
``sum(|terms|) / |sum|`` seen at the summation sites that matter, which is
what drives precision escalation in the callers.
"""

from __future__ import annotations

import cmath
import math

import mpmath
from scipy.special import loggamma as _sp_loggamma

from .exceptions import CancellationError, GammaPoleError

DOUBLE_EPS = 2.0**-53
MAX_DIGITS = 600


def is_nonpositive_integer(z) -> bool:
    z = complex(z)
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _neumaier(values) -> float:
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


class DoubleContext:
    """Hardware ``complex`` arithmetic."""

    dps = 15
    is_mp = False
    pi = math.pi

    def __init__(self):
        self.worst = 1.0

    def note(self, ratio: float) -> None:
        if ratio > self.worst:
            self.worst = ratio

    @property
    def eps(self) -> float:
        return DOUBLE_EPS

    def num(self, z) -> complex:
        return complex(z)

    def loggamma(self, z) -> complex:
        z = complex(z)
        if is_nonpositive_integer(z):
            raise GammaPoleError(z)
        return complex(_sp_loggamma(z))

    def exp(self, z) -> complex:
        return cmath.exp(z)

    def log(self, z) -> complex:
        return cmath.log(z)

    def sqrt(self, z) -> complex:
        return cmath.sqrt(z)

    def sinpi(self, z) -> complex:
        z = complex(z)
        r = z.real - 2.0 * round(z.real / 2.0)
        if z.imag == 0.0 and r == math.floor(r):
            return 0j
        return cmath.sin(math.pi * complex(r, z.imag))

    def power(self, x, b) -> complex:
        """``x**b`` on the principal branch."""
        return cmath.exp(complex(b) * cmath.log(x))

    def fsum(self, terms) -> complex:
        """Neumaier-compensated complex sum."""
        terms = [complex(t) for t in terms]
        return complex(_neumaier(t.real for t in terms), _neumaier(t.imag for t in terms))

    def to_complex(self, z) -> complex:
        return complex(z)


class MpContext:
    """mpmath multiprecision arithmetic at a fixed number of digits."""

    is_mp = True

    def __init__(self, dps: int = 40):
        self.mp = mpmath.MPContext()
        self.mp.dps = int(dps)
        self.worst = 1.0
        self.pi = self.mp.pi

    @property
    def dps(self) -> int:
        return self.mp.dps

    @property
    def eps(self):
        return self.mp.eps

    def note(self, ratio: float) -> None:
        if ratio > self.worst:
            self.worst = ratio

    def num(self, z):
        if isinstance(z, (mpmath.mpc, mpmath.mpf)):
            return self.mp.mpc(z)
        if isinstance(z, complex):
            return self.mp.mpc(z.real, z.imag)
        return self.mp.mpc(z)

    def loggamma(self, z):
        z = self.num(z)
        if z.imag == 0 and z.real <= 0 and z.real == self.mp.floor(z.real):
            raise GammaPoleError(complex(z))
        return self.mp.loggamma(z)

    def exp(self, z):
        return self.mp.exp(z)

    def log(self, z):
        return self.mp.log(self.num(z))

    def sqrt(self, z):
        return self.mp.sqrt(self.num(z))

    def sinpi(self, z):
        return self.mp.sinpi(self.num(z))

    def power(self, x, b):
        return self.mp.exp(self.num(b) * self.mp.log(self.num(x)))

    def fsum(self, terms):
        return self.mp.fsum(terms)

    def to_complex(self, z) -> complex:
        return complex(z)

    def raised(self, extra_digits: int) -> "MpContext":
        return MpContext(self.dps + int(extra_digits))


def sum_tracked(ctx, terms, record: bool = True):
    """Sum ``terms`` and report the cancellation ratio to ``ctx``."""
    terms = list(terms)
    total = ctx.fsum(terms)
    mag = sum(float(abs(t)) for t in terms)
    denom = float(abs(total))
    ratio = mag / denom if denom > 0.0 else (math.inf if mag > 0.0 else 1.0)
    if record:
        ctx.note(ratio)
    return total


def escalation_digits(worst: float, base: int = 30) -> int:
    """Working digits for an mp re-run after seeing cancellation ``worst``."""
    if not math.isfinite(worst):
        return base + 60
    return base + int(math.ceil(1.5 * math.log10(max(worst, 1.0))))


def escalate(run, worst: float, min_digits: int = 0):
    """Re-run ``run(ctx)`` in multiprecision until it fits the working precision.

    A double-precision pass can under-report its own cancellation (the sums it
    measures are already noise), so each mp pass is checked again and the
    digits raised until the cancellation it sees is covered.
    """
    digits = max(escalation_digits(worst), int(min_digits))
    while True:
        ctx = MpContext(digits)
        value = run(ctx)
        need = escalation_digits(ctx.worst)
        if need <= digits:
            return value
        if digits >= MAX_DIGITS:
            raise CancellationError(f"cancellation {ctx.worst:.3g} not resolved at {digits} digits")
        digits = min(MAX_DIGITS, max(need, digits + 10))

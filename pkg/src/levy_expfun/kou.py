"""Kou double-exponential jump diffusion: Laplace exponent and the roots of psi(z) = q."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._validation import check_complex, check_open_unit, check_positive, check_real
from .exceptions import ParameterError, PoleError, RootFindingError

HOMOTOPY_STEPS = 32
MAX_HOMOTOPY_STEPS = 4096
COLLISION_TOL = 1e-10
RE_Q_FLOOR = 1e-8


@dataclass(frozen=True)
class KouParams:
    """``X_t = mu t + sigma W_t + compound Poisson`` with double-exponential jumps.

    Up-jumps occur with probability ``p`` and are Exp(``rho``); down-jumps are
    Exp(``rho_hat``) in absolute size.
    """

    mu: float
    sigma: float
    lam: float = 0.0
    p: float = 0.5
    rho: float = 1.0
    rho_hat: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mu", check_real(self.mu, "mu"))
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma"))
        object.__setattr__(self, "lam", check_positive(self.lam, "lambda", allow_zero=True))
        object.__setattr__(self, "p", check_open_unit(self.p, "p"))
        object.__setattr__(self, "rho", check_positive(self.rho, "rho"))
        object.__setattr__(self, "rho_hat", check_positive(self.rho_hat, "rho_hat"))

    @property
    def A(self) -> float:
        return 0.5 * self.sigma**2

    def with_drift(self, mu: float) -> "KouParams":
        return KouParams(mu, self.sigma, self.lam, self.p, self.rho, self.rho_hat)

    def with_lambda(self, lam: float) -> "KouParams":
        return KouParams(self.mu, self.sigma, lam, self.p, self.rho, self.rho_hat)


def laplace_exponent(params: KouParams, z):
    """``psi(z) = log E[exp(z X_1)]``; works on scalars, numpy arrays and mp numbers."""
    k = params
    if isinstance(z, (int, float, complex)) and (z == k.rho or z == -k.rho_hat):
        raise PoleError(f"psi has a pole at z = {z!r}")
    return (
        k.mu * z
        + 0.5 * k.sigma**2 * z * z
        + k.lam * k.p * z / (k.rho - z)
        - k.lam * (1.0 - k.p) * z / (k.rho_hat + z)
    )


def quartic_coefficients(params: KouParams, q, num=complex):
    """Coefficients (highest degree first) of ``(psi(z) - q)(rho - z)(rho_hat + z)``.

    ``num`` converts scalars, so the same code builds mp coefficients.
    """
    A, mu, lam, p = num(params.A), num(params.mu), num(params.lam), num(params.p)
    rho, rh, q = num(params.rho), num(params.rho_hat), num(q)
    # (A z^2 + mu z - q) * (-z^2 + (rho - rh) z + rho rh)
    quad = [A, mu, -q]
    dens = [num(-1), rho - rh, rho * rh]
    out = [num(0)] * 5
    for i, ci in enumerate(quad):
        for j, dj in enumerate(dens):
            out[i + j] += ci * dj
    # + lam p z (rh + z) - lam (1 - p) z (rho - z)
    out[2] += lam * p + lam * (1 - p)
    out[3] += lam * p * rh - lam * (1 - p) * rho
    return out


def _horner(coeffs, z):
    val = coeffs[0] * 0
    dval = coeffs[0] * 0
    for c in coeffs:
        dval = dval * z + val
        val = val * z + c
    return val, dval


def _newton_polish(coeffs, z, iters=4):
    for _ in range(iters):
        val, dval = _horner(coeffs, z)
        if dval == 0:
            break
        step = val / dval
        z = z - step
        if abs(step) <= 1e-17 * max(abs(z), 1e-300):
            break
    return z


@dataclass(frozen=True)
class RootSystem:
    """Roots ``zeta1 < rho < zeta2`` and ``-zeta_hat2 < -rho_hat < -zeta_hat1`` of psi(z) = q."""

    q: complex
    A: float
    zeta1: complex
    zeta2: complex
    zeta_hat1: complex
    zeta_hat2: complex
    rho: float
    rho_hat: float
    params: KouParams

    @property
    def roots(self) -> tuple:
        """The four zeros of psi(z) - q, in the order ``(zeta1, zeta2, -zeta_hat1, -zeta_hat2)``."""
        return (self.zeta1, self.zeta2, -self.zeta_hat1, -self.zeta_hat2)

    def product_identity_residual(self) -> float:
        lhs = self.A * self.zeta1 * self.zeta2 * self.zeta_hat1 * self.zeta_hat2 / (self.rho * self.rho_hat)
        return abs(lhs - self.q) / abs(self.q)

    def values(self, ctx):
        """``(zeta1, zeta2, zeta_hat1, zeta_hat2, A, rho, rho_hat, q)`` as ``ctx`` numbers.

        In multiprecision the roots are re-polished by Newton's method on the
        quartic built at that precision.
        """
        if not ctx.is_mp:
            return (
                complex(self.zeta1), complex(self.zeta2), complex(self.zeta_hat1), complex(self.zeta_hat2),
                complex(self.A), complex(self.rho), complex(self.rho_hat), complex(self.q),
            )
        coeffs = quartic_coefficients(self.params, self.q, num=ctx.num)
        tol = ctx.mp.mpf(10) ** (-ctx.dps + 3)
        polished = []
        for r in self.roots:
            z = ctx.num(r)
            for _ in range(60):
                val, dval = _horner(coeffs, z)
                step = val / dval
                z = z - step
                if abs(step) <= tol * abs(z):
                    break
            polished.append(z)
        half = ctx.num(self.params.sigma) ** 2 / 2
        return (
            polished[0], polished[1], -polished[2], -polished[3],
            half, ctx.num(self.rho), ctx.num(self.rho_hat), ctx.num(self.q),
        )


def _real_roots(params: KouParams, q: float):
    coeffs = [c.real for c in quartic_coefficients(params, q)]
    poly = np.poly1d(coeffs)
    rho, rh = params.rho, params.rho_hat

    def outward(start, direction):
        step = max(1.0, abs(start))
        z = start + direction * step
        while poly(z) >= 0:
            step *= 2.0
            z = start + direction * step
            if step > 1e12:
                raise RootFindingError("could not bracket an outer root")
        return z

    brackets = [
        (outward(-rh, -1.0), -rh),
        (-rh, 0.0),
        (0.0, rho),
        (rho, outward(rho, 1.0)),
    ]
    roots = []
    for lo, hi in brackets:
        if not poly(lo) * poly(hi) < 0:
            raise RootFindingError(f"no sign change on [{lo}, {hi}]")
        r = brentq(poly, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        roots.append(_newton_polish(coeffs, r))
    zh2, zh1, z1, z2 = (-roots[0], -roots[1], roots[2], roots[3])
    return z1, z2, zh1, zh2


def _match(prev, new):
    best = None
    second = math.inf
    for perm in itertools.permutations(range(4)):
        cost = sum(abs(prev[i] - new[perm[i]]) for i in range(4))
        if best is None or cost < best[0]:
            if best is not None:
                second = best[0]
            best = (cost, perm)
        elif cost < second:
            second = cost
    return best[1], best[0], second


def _homotopy(params: KouParams, q0: float, q: complex, steps: int):
    z1, z2, zh1, zh2 = _real_roots(params, q0)
    current = [complex(z1), complex(z2), complex(-zh1), complex(-zh2)]
    for i in range(1, steps + 1):
        qt = q0 + (q - q0) * (i / steps)
        coeffs = quartic_coefficients(params, qt)
        new = list(np.roots(coeffs))
        gaps = [abs(new[a] - new[b]) for a in range(4) for b in range(a + 1, 4)]
        if min(gaps) < COLLISION_TOL:
            return None
        perm, cost, second = _match(current, new)
        if second < 2.0 * cost + 1e-14:
            return None
        current = [_newton_polish(coeffs, new[perm[j]]) for j in range(4)]
    return current


def solve_roots(params: KouParams, q) -> RootSystem:
    """Labelled roots of ``psi(z) = q`` for ``Re(q) > 0`` and ``lambda > 0``.

    Real ``q``: one bracketed root per interlacing interval.  Complex ``q``:
    straight-line continuation from ``Re(q)`` with nearest-neighbour matching.
    """
    if params.lam <= 0.0:
        raise ParameterError("lambda = 0 has only two roots; use the gbm module")
    q = check_complex(q, "q")
    if q.imag == 0.0:
        if q.real <= 0.0:
            raise ParameterError(f"q must have positive real part, got {q!r}")
        z1, z2, zh1, zh2 = _real_roots(params, q.real)
        rs = RootSystem(q, params.A, z1, z2, zh1, zh2, params.rho, params.rho_hat, params)
        if not (-zh2 < -params.rho_hat < -zh1 < 0 < z1 < params.rho < z2):
            raise RootFindingError(f"interlacing violated for q={q}: {rs.roots}")
        return rs
    q0 = q.real
    if q0 <= 0.0:
        warnings.warn(f"Re(q) = {q0} <= 0; starting the root continuation from {RE_Q_FLOOR}", RuntimeWarning)
        q0 = RE_Q_FLOOR
    steps = HOMOTOPY_STEPS
    while steps <= MAX_HOMOTOPY_STEPS:
        current = _homotopy(params, q0, q, steps)
        if current is not None:
            z1, z2, mzh1, mzh2 = (complex(c) for c in current)
            return RootSystem(q, params.A, z1, z2, -mzh1, -mzh2, params.rho, params.rho_hat, params)
        steps *= 2
    raise RootFindingError(f"root continuation to q={q} is ambiguous (colliding roots)")


def psi_prime(rs: RootSystem, params: KouParams = None, at="zeta1") -> complex:
    """``psi'(zeta)`` at ``zeta1`` or ``zeta2`` from the factorized form of ``psi(z) - q``."""
    z1, z2, zh1, zh2 = rs.zeta1, rs.zeta2, rs.zeta_hat1, rs.zeta_hat2
    if isinstance(at, str):
        label = at
    elif abs(complex(at) - z1) <= 1e-12 * (1 + abs(z1)):
        label = "zeta1"
    elif abs(complex(at) - z2) <= 1e-12 * (1 + abs(z2)):
        label = "zeta2"
    else:
        raise ValueError("psi_prime is only available at zeta1 or zeta2")
    if label == "zeta2":
        z1, z2 = z2, z1
    elif label != "zeta1":
        raise ValueError(f"unknown root label {label!r}")
    return rs.A * (z1 - z2) * (z1 + zh1) * (z1 + zh2) / ((z1 - rs.rho) * (z1 + rs.rho_hat))


def moment_match(mu1: float, sigma1: float, lam: float, p: float, rho: float, rho_hat: float) -> KouParams:
    """Kou parameters sharing the mean and variance of ``X_1`` with a GBM ``(mu1, sigma1)``."""
    var = sigma1**2 - 2.0 * lam * p / rho**2 - 2.0 * lam * (1.0 - p) / rho_hat**2
    if var <= 0.0:
        raise ParameterError(f"implied diffusion variance {var:.6g} is not positive")
    mu2 = mu1 - lam * p / rho + lam * (1.0 - p) / rho_hat
    return KouParams(mu2, math.sqrt(var), lam, p, rho, rho_hat)

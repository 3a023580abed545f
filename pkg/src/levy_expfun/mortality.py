"""Gompertz-Makeham lifetimes and their approximation by complex exponential sums.

A density sampled on a uniform grid is approximated as ``sum_i w_i exp(-s_i t)``
with ``Re(s_i) > 0``.  Two Hankel-type fits are provided:

``"hankel"``
    singular vector of the square Hankel matrix of the samples (the
    con-eigenvector of a real symmetric Hankel matrix), whose polynomial roots
    inside the unit disk are the candidate nodes;
``"pencil"``
    matrix pencil on the rank-M signal subspace of a rectangular Hankel matrix.

Weights always come from a least-squares Vandermonde solve on the samples.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator

from ._validation import check_1d, check_int, check_is_fitted, check_positive
from .exceptions import ConvergenceError, ParameterError

CONJ_TOL = 1e-9
CHECK_POINTS = 20001


@dataclass(frozen=True)
class GompertzMakeham:
    """Remaining lifetime at ``age`` under the hazard ``A + B c^(age + t)``."""

    age: float = 65.0
    A: float = 0.0007
    B: float = 0.00005
    c: float = 10**0.04

    def __post_init__(self):
        check_positive(self.age, "age", allow_zero=True)
        check_positive(self.A, "A", allow_zero=True)
        check_positive(self.B, "B")
        if not float(self.c) > 1.0:
            raise ParameterError(f"c must exceed 1, got {self.c!r}")

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        return self.A + self.B * self.c ** (self.age + t)

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        lc = math.log(self.c)
        return np.exp(-self.A * t - self.B * self.c**self.age * np.expm1(t * lc) / lc)

    def density(self, t):
        return self.hazard(t) * self.survival(t)

    def horizon_for(self, tail: float = 1e-12) -> float:
        """Smallest integer ``T`` with ``S(T) < tail``."""
        T = 1.0
        while self.survival(T) >= tail:
            T += 1.0
        return T

    def mean(self) -> float:
        val, _ = integrate.quad(lambda t: float(self.survival(t)), 0.0, self.horizon_for(1e-16), limit=200)
        return val


@dataclass(frozen=True)
class ExpSum:
    """``f(t) ~ sum_i w_i exp(-s_i t)``."""

    terms: tuple
    horizon: float
    sup_error: float

    def __post_init__(self):
        terms = tuple((complex(s), complex(w)) for s, w in self.terms)
        if any(s.real <= 0 for s, _ in terms):
            raise ParameterError("every node must have a positive real part")
        object.__setattr__(self, "terms", terms)

    @property
    def nodes(self) -> np.ndarray:
        return np.array([s for s, _ in self.terms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.terms])

    def __len__(self) -> int:
        return len(self.terms)

    def evaluate(self, t) -> np.ndarray:
        """Complex values of the sum (the imaginary part is round-off for paired terms)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(-np.outer(t, self.nodes)) @ self.weights

    def __call__(self, t):
        return self.evaluate(t).real

    def to_dict(self) -> dict:
        return {
            "terms": [{"s_re": s.real, "s_im": s.imag, "w_re": w.real, "w_im": w.imag} for s, w in self.terms],
            "horizon": self.horizon,
            "sup_error": self.sup_error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExpSum":
        try:
            terms = [(complex(d["s_re"], d["s_im"]), complex(d["w_re"], d["w_im"])) for d in data["terms"]]
            return cls(tuple(terms), float(data["horizon"]), float(data["sup_error"]))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed exponential-sum JSON: {exc}") from None

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "ExpSum":
        """Read from a path or from the JSON text itself."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text()
        return cls.from_dict(json.loads(source))


# ------------------------------------------------------------------ fitting


def _hankel_nodes(h: np.ndarray, M: int) -> np.ndarray:
    n = (len(h) - 1) // 2
    H = np.lib.stride_tricks.sliding_window_view(h[: 2 * n + 1], n + 1)
    if M > n:
        raise ParameterError(f"M = {M} needs at least {2 * M + 1} samples")
    U, S, _ = np.linalg.svd(H)
    u = U[:, M]
    return np.roots(u[::-1])


def _pencil_nodes(h: np.ndarray, M: int) -> np.ndarray:
    L = len(h) // 2
    Y = np.lib.stride_tricks.sliding_window_view(h, L + 1)
    if M > min(Y.shape) - 1:
        raise ParameterError(f"M = {M} too large for {len(h)} samples")
    _, S, Vt = np.linalg.svd(Y, full_matrices=False)
    if S[M - 1] <= S[0] * 1e-15:
        raise ParameterError(f"sample matrix has numerical rank below M = {M}")
    V = Vt[:M].conj().T
    return np.linalg.eigvals(np.linalg.pinv(V[:-1]) @ V[1:])


def _solve_weights(z: np.ndarray, h: np.ndarray) -> np.ndarray:
    k = np.arange(len(h))[:, None]
    with np.errstate(under="ignore"):
        V = z[None, :] ** k
    return np.linalg.lstsq(V, h.astype(complex), rcond=None)[0]


def _units(z: np.ndarray, w: np.ndarray):
    """Group nodes into real singletons and conjugate pairs; returns index tuples."""
    left = list(range(len(z)))
    units = []
    while left:
        i = left.pop(0)
        if abs(z[i].imag) <= CONJ_TOL * max(1.0, abs(z[i])):
            units.append((i,))
            continue
        j = min(left, key=lambda k: abs(z[k] - np.conj(z[i])), default=None)
        if j is not None and abs(z[j] - np.conj(z[i])) <= 1e-6 * max(1.0, abs(z[i])):
            left.remove(j)
            units.append((i, j))
        else:
            units.append((i,))
    return units


def _select(z: np.ndarray, w: np.ndarray, M: int) -> np.ndarray:
    units = sorted(_units(z, w), key=lambda u: -max(abs(w[i]) for i in u))
    chosen = []
    for u in units:
        if len(chosen) + len(u) <= M:
            chosen.extend(u)
    return np.array(sorted(chosen), dtype=int)


def _symmetrize(z: np.ndarray, w: np.ndarray):
    z, w = z.copy(), w.copy()
    for u in _units(z, w):
        if len(u) == 1:
            i = u[0]
            if abs(z[i].imag) <= CONJ_TOL * max(1.0, abs(z[i])):
                z[i], w[i] = z[i].real, w[i].real
        else:
            i, j = u
            zi = 0.5 * (z[i] + np.conj(z[j]))
            wi = 0.5 * (w[i] + np.conj(w[j]))
            z[i], z[j], w[i], w[j] = zi, np.conj(zi), wi, np.conj(wi)
    return z, w


class ExponentialSumFit(BaseEstimator):
    """Fit ``sum_i w_i exp(-s_i t)`` to samples ``y`` on a uniform grid ``t``.

    Parameters
    ----------
    n_terms : int
        Number of exponentials M.
    method : {"hankel", "pencil"}
        Node extraction (see module docstring).
    """

    def __init__(self, n_terms: int = 15, method: str = "hankel"):
        self.n_terms = n_terms
        self.method = method

    def fit(self, t, y):
        t = check_1d(t, "t")
        y = check_1d(y, "y")
        M = check_int(self.n_terms, "n_terms", minimum=1)
        if self.method not in ("hankel", "pencil"):
            raise ParameterError(f"method must be 'hankel' or 'pencil', got {self.method!r}")
        if len(t) != len(y) or len(t) < 2 * M + 1:
            raise ParameterError(f"need matching t/y with at least {2 * M + 1} samples")
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0) or dt[0] <= 0:
            raise ParameterError("t must be an increasing uniform grid")
        step = dt[0]
        h = y * 1.0
        z = _hankel_nodes(h, M) if self.method == "hankel" else _pencil_nodes(h, M)
        z = z[(np.abs(z) < 1.0) & (np.abs(z) > 0.0)]
        if len(z) == 0:
            raise ConvergenceError("no decaying nodes found")
        if len(z) > M:
            w = _solve_weights(z, h)
            z = z[_select(z, w, M)]
        if len(z) < M:
            warnings.warn(f"only {len(z)} decaying nodes survive; returning a shorter sum", RuntimeWarning)
        w = _solve_weights(z, h)
        z, w = _symmetrize(z, w)
        s = -np.log(z) / step
        order = np.lexsort((s.imag, s.real))
        self.nodes_ = s[order] + 0j
        self.weights_ = w[order] + 0j
        self.t0_ = t[0]
        self.sup_error_ = float(np.max(np.abs(self.predict(t) - y)))
        return self

    def predict(self, t):
        check_is_fitted(self, "nodes_")
        t = np.atleast_1d(np.asarray(t, dtype=float)) - self.t0_
        return (np.exp(-np.outer(t, self.nodes_)) @ self.weights_).real

    def to_expsum(self, horizon: float, sup_error: float = None) -> ExpSum:
        check_is_fitted(self, "nodes_")
        if self.t0_ != 0.0:
            raise ParameterError("only fits anchored at t = 0 convert to an ExpSum")
        err = self.sup_error_ if sup_error is None else sup_error
        return ExpSum(tuple(zip(self.nodes_, self.weights_)), float(horizon), float(err))


def fit_exponential_sum(
    gm, M: int = 15, horizon: float = 100.0, samples: int = 201, method: str = "hankel",
    tolerance: float = None,
) -> ExpSum:
    """Exponential-sum fit of a lifetime density on ``[0, horizon]``.

    ``gm`` is a :class:`GompertzMakeham` or any vectorized callable ``f(t)``.
    ``sup_error`` is measured against ``f`` on a grid of 20001 points, which is
    finer than the fitting grid.
    """
    horizon = check_positive(horizon, "horizon")
    samples = check_int(samples, "samples", minimum=3)
    f = gm.density if isinstance(gm, GompertzMakeham) else gm
    t = np.linspace(0.0, horizon, samples)
    est = ExponentialSumFit(n_terms=M, method=method).fit(t, np.asarray(f(t), dtype=float))
    check = np.linspace(0.0, horizon, CHECK_POINTS)
    err = float(np.max(np.abs(est.predict(check) - np.asarray(f(check), dtype=float))))
    if tolerance is not None and err > tolerance:
        raise ConvergenceError(f"sup error {err:.3g} exceeds tolerance {tolerance:.3g}")
    return est.to_expsum(horizon, err)

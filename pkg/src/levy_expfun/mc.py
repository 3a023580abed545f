"""Monte Carlo baseline for GMDB tail probabilities.

Lifetimes come from acceptance-rejection against a piecewise-constant
envelope; account paths are simulated on a fixed grid and the net liability
is the left-point Riemann sum of the fee stream plus the benefit paid at the
end of the step of death.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_positive
from .exceptions import ParameterError
from .mortality import GompertzMakeham
from .risk import Contract

PANELS = 64
ENVELOPE_FACTOR = 1.05
PANEL_PROBES = 257
BLOCK = 10_000


@dataclass(frozen=True)
class SimConfig:
    paths: int
    step: float = 0.01
    experiments: int = 20
    seed: int = 20240601
    max_age_horizon: float = None

    def __post_init__(self):
        check_int(self.paths, "paths", minimum=1)
        check_positive(self.step, "step")
        check_int(self.experiments, "experiments", minimum=1)
        check_int(self.seed, "seed", minimum=0)
        if self.max_age_horizon is not None:
            check_positive(self.max_age_horizon, "max_age_horizon")


class LifetimeSampler:
    """Acceptance-rejection for the lifetime density with a 64-panel step envelope."""

    def __init__(self, gm: GompertzMakeham, horizon: float = None):
        self.gm = gm
        self.horizon = gm.horizon_for(1e-12) if horizon is None else float(horizon)
        self.edges = np.linspace(0.0, self.horizon, PANELS + 1)
        probes = np.linspace(self.edges[:-1], self.edges[1:], PANEL_PROBES)
        self.envelope = ENVELOPE_FACTOR * gm.density(probes).max(axis=0)
        mass = self.envelope * np.diff(self.edges)
        self.panel_prob = mass / mass.sum()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size)
        filled = 0
        while filled < size:
            n = max(64, int(1.3 * (size - filled)))
            j = rng.choice(PANELS, size=n, p=self.panel_prob)
            t = self.edges[j] + rng.random(n) * (self.edges[j + 1] - self.edges[j])
            keep = t[rng.random(n) * self.envelope[j] < self.gm.density(t)]
            take = min(len(keep), size - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out


def sample_lifetime(gm: GompertzMakeham, rng: np.random.Generator) -> float:
    """One remaining-lifetime draw."""
    return float(LifetimeSampler(gm).sample(rng, 1)[0])


def _jump_marks(contract: Contract, rng, n: int) -> np.ndarray:
    k = contract.adjusted
    up = rng.random(n) < k.p
    return np.where(up, rng.exponential(1.0 / k.rho, n), -rng.exponential(1.0 / k.rho_hat, n))


def simulate_liabilities(contract: Contract, lifetimes: np.ndarray, rng: np.random.Generator, step: float) -> np.ndarray:
    """Net liabilities for a batch of lifetimes (vectorized over paths)."""
    k = contract.adjusted
    steps = np.maximum(np.ceil(np.asarray(lifetimes) / step - 1e-12).astype(np.int64), 1)
    order = np.argsort(-steps, kind="stable")
    n_sorted = steps[order]
    P = len(n_sorted)

    # jumps: a Poisson total per path, placed uniformly over that path's steps
    counts = rng.poisson(k.lam * step * n_sorted) if k.lam > 0 else np.zeros(P, dtype=np.int64)
    owner = np.repeat(np.arange(P), counts)
    when = (rng.random(owner.size) * n_sorted[owner]).astype(np.int64)
    marks = _jump_marks(contract, rng, owner.size)
    by_step = np.argsort(when, kind="stable")
    owner, when, marks = owner[by_step], when[by_step], marks[by_step]
    bounds = np.searchsorted(when, np.arange(n_sorted[0] + 1))

    drift = k.mu * step
    vol = k.sigma * math.sqrt(step)
    X = np.zeros(P)
    fees = np.zeros(P)
    # paths are sorted by step count, so the ones still alive at step s are a prefix
    alive = P - np.searchsorted(n_sorted[::-1], np.arange(n_sorted[0]), side="right")
    for s in range(n_sorted[0]):
        a = alive[s]
        fees[:a] += np.exp(X[:a])
        X[:a] += drift + vol * rng.standard_normal(a)
        lo, hi = bounds[s], bounds[s + 1]
        if hi > lo:
            np.add.at(X, owner[lo:hi], marks[lo:hi])
    F0 = contract.F0
    L = F0 * np.maximum(1.0 - np.exp(X), 0.0) - contract.m_d * F0 * step * fees
    out = np.empty(P)
    out[order] = L
    return out


def net_liability_path(contract: Contract, t: float, rng: np.random.Generator, step: float = 0.01) -> float:
    """Net liability for a single death time ``t``."""
    check_positive(t, "t")
    return float(simulate_liabilities(contract, np.array([t]), rng, step)[0])


@dataclass(frozen=True)
class TailEstimate:
    V: tuple
    mean: np.ndarray
    std: np.ndarray
    per_experiment: np.ndarray

    def rows(self, analytic=None):
        """CSV-style rows: V, mc_mean, mc_std, analytic, abs_diff, within_3std."""
        out = []
        for i, v in enumerate(self.V):
            a = None if analytic is None else float(analytic[i])
            diff = None if a is None else abs(self.mean[i] - a)
            ok = None if a is None else bool(diff <= 3.0 * self.std[i])
            out.append({"V": v, "mc_mean": float(self.mean[i]), "mc_std": float(self.std[i]),
                        "analytic": a, "abs_diff": diff, "within_3std": ok})
        return out


def _experiment(contract, sampler, V, config, seq):
    blocks = [min(BLOCK, config.paths - b) for b in range(0, config.paths, BLOCK)]
    hits = np.zeros(len(V))
    for size, child in zip(blocks, seq.spawn(len(blocks))):
        rng = np.random.Generator(np.random.PCG64(child))
        L = simulate_liabilities(contract, sampler.sample(rng, size), rng, config.step)
        hits += (L[None, :] > V[:, None]).sum(axis=1)
    return hits / config.paths


def estimate_tail_prob(contract: Contract, gm: GompertzMakeham, V, config: SimConfig, threads: int = 1) -> TailEstimate:
    """Cross-experiment mean and sample std of the fraction of paths with ``L > V``.

    Streams are spawned by (experiment, block) index, so results do not depend
    on ``threads``.
    """
    V = np.atleast_1d(np.asarray(V, dtype=float))
    if V.ndim != 1 or not np.all(np.isfinite(V)):
        raise ParameterError("V must be a finite 1-d list")
    sampler = LifetimeSampler(gm, config.max_age_horizon)
    seqs = np.random.SeedSequence(config.seed).spawn(config.experiments)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            est = list(pool.map(lambda s: _experiment(contract, sampler, V, config, s), seqs))
    else:
        est = [_experiment(contract, sampler, V, config, s) for s in seqs]
    est = np.array(est)
    std = est.std(axis=0, ddof=1) if config.experiments > 1 else np.zeros(len(V))
    return TailEstimate(tuple(float(v) for v in V), est.mean(axis=0), std, est)

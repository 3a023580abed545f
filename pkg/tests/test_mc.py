import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import TABLE1_EQUITY
from levy_expfun import Contract, GompertzMakeham, KouParams, ParameterError, SimConfig, estimate_tail_prob
from levy_expfun import gmdb_tail_probability as tail_probability
from levy_expfun import net_liability_path
from levy_expfun.mc import LifetimeSampler, _jump_marks, simulate_liabilities


@pytest.fixture(scope="module")
def lifetimes(gm):
    return LifetimeSampler(gm).sample(np.random.default_rng(3), 200_000)


def test_lifetime_mean_and_tail(gm, lifetimes):
    se = lifetimes.std() / math.sqrt(len(lifetimes))
    assert abs(lifetimes.mean() - gm.mean()) < 3 * se
    p = float(gm.survival(35.0))
    assert abs(np.mean(lifetimes > 35.0) - p) < 3 * math.sqrt(p * (1 - p) / len(lifetimes))


def test_lifetime_distribution(gm, lifetimes):
    res = stats.kstest(lifetimes[:20_000], lambda t: 1.0 - gm.survival(t))
    assert res.pvalue > 1e-3


def test_sampler_handles_concentrated_density():
    gm = GompertzMakeham(B=0.01)
    draws = LifetimeSampler(gm).sample(np.random.default_rng(5), 50_000)
    se = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - gm.mean()) < 3 * se
    assert gm.mean() < 2.0


def test_sampler_envelope_dominates(gm):
    s = LifetimeSampler(gm)
    t = np.linspace(0, s.horizon, 100_001)[:-1]
    j = np.minimum(np.searchsorted(s.edges, t, side="right") - 1, len(s.envelope) - 1)
    assert np.all(s.envelope[j] >= gm.density(t))


def test_deterministic_path():
    # no noise and no jumps: X*_t = 0.05 t, so both pieces of L have closed forms
    c = Contract(KouParams(0.08, 1e-12, 0.0), r=0.02, m=0.01, m_d=0.01)
    t, step = 2.345, 0.01
    n = math.ceil(t / step)
    fees = c.m_d * step * sum(math.exp(0.05 * k * step) for k in range(n))
    expected = max(1.0 - math.exp(0.05 * n * step), 0.0) - fees
    assert net_liability_path(c, t, np.random.default_rng(0), step) == pytest.approx(expected, abs=1e-12)


def test_degenerate_liability_is_tiny():
    c = Contract(KouParams(0.03, 1e-9, 0.0), r=0.02, m=0.01, m_d=1e-12)
    L = simulate_liabilities(c, np.array([1.0, 10.0, 40.0]), np.random.default_rng(1), 0.01)
    assert np.max(np.abs(L)) < 1e-8


def test_jump_marks_moments(contract):
    marks = _jump_marks(contract, np.random.default_rng(2), 400_000)
    k = contract.adjusted
    mean = k.p / k.rho - (1 - k.p) / k.rho_hat
    var = 2 * k.p / k.rho**2 + 2 * (1 - k.p) / k.rho_hat**2 - mean**2
    assert abs(marks.mean() - mean) < 4 * math.sqrt(var / len(marks))


def test_terminal_distribution_without_jumps():
    # all deaths at t = 1 and no fee drag: L = (1 - exp(X*_1))+ with X*_1 ~ N(mu*, sigma^2)
    c = Contract(KouParams(0.064161, 0.16, 0.0), m_d=1e-12)
    n = 200_000
    L = simulate_liabilities(c, np.full(n, 1.0), np.random.default_rng(4), 0.01)
    mu_star = 0.064161 - 0.03
    for v in (0.0, 0.1, 0.25):
        p = stats.norm.cdf((math.log1p(-v) - mu_star) / 0.16)
        assert abs(np.mean(L > v) - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_fee_rate_monotone_with_paired_streams(gm):
    cfg = SimConfig(2000, experiments=3, seed=9)
    V = [0.0, 0.3]
    lo = estimate_tail_prob(Contract(TABLE1_EQUITY, m_d=0.002), gm, V, cfg)
    hi = estimate_tail_prob(Contract(TABLE1_EQUITY, m_d=0.006), gm, V, cfg)
    assert np.all(hi.per_experiment <= lo.per_experiment)


def test_reproducible_and_thread_independent(contract, gm):
    cfg = SimConfig(3000, experiments=4, seed=21)
    a = estimate_tail_prob(contract, gm, [0.2, 0.6], cfg)
    b = estimate_tail_prob(contract, gm, [0.2, 0.6], cfg, threads=3)
    assert np.array_equal(a.per_experiment, b.per_experiment)
    c = estimate_tail_prob(contract, gm, [0.2, 0.6], SimConfig(3000, experiments=4, seed=22))
    assert not np.array_equal(a.per_experiment, c.per_experiment)


def test_losses_at_or_above_premium(contract, gm):
    est = estimate_tail_prob(contract, gm, [1.0, 1.5], SimConfig(2000, experiments=2, seed=1))
    assert np.all(est.mean == 0.0)


def test_rows_report(contract, gm):
    est = estimate_tail_prob(contract, gm, [0.2], SimConfig(1000, experiments=3, seed=2))
    (row,) = est.rows([est.mean[0] + 10 * est.std[0]])
    assert row["within_3std"] is False and row["abs_diff"] == pytest.approx(10 * est.std[0])
    assert est.rows()[0]["analytic"] is None


def test_std_matches_binomial_and_scales(contract, gm, mc_large):
    # each experiment's estimate is a binomial proportion, so (n-1) s^2 / sigma^2 ~ chi2(n-1)
    small = estimate_tail_prob(contract, gm, mc_large.V, SimConfig(1000, experiments=20, seed=12))
    lo, hi = stats.chi2.ppf([0.0005, 0.9995], 19)
    for est, N in ((small, 1000), (mc_large, 100_000)):
        sigma2 = est.mean * (1 - est.mean) / N
        ratio = 19 * est.std**2 / sigma2
        assert np.all((ratio > lo) & (ratio < hi)), ratio
    # pooled over the three levels, the variance ratio / 100 is F(57, 57)
    F = np.sum(small.std**2) / np.sum(mc_large.std**2) / 100.0
    f_lo, f_hi = stats.f.ppf([0.0005, 0.9995], 57, 57)
    assert f_lo < F < f_hi


def test_mean_positive_liability_against_analytic(contract, gm, expsum):
    rng = np.random.default_rng(8)
    n = 60_000
    L = np.maximum(simulate_liabilities(contract, LifetimeSampler(gm).sample(rng, n), rng, 0.01), 0.0)
    # E[L+] = int_0^{F0} P(L > v) dv; above v = 0.99 the tail is below 1e-8
    area = integrate.quad(lambda v: tail_probability(contract, expsum, v), 0.0, 0.99, epsabs=1e-8, limit=100)[0]
    assert abs(L.mean() - area) < 4 * L.std() / math.sqrt(n)


def test_invalid_config():
    with pytest.raises(ParameterError):
        SimConfig(0)
    with pytest.raises(ParameterError):
        SimConfig(10, step=0.0)
    with pytest.raises(ParameterError):
        net_liability_path(Contract(TABLE1_EQUITY), 0.0, np.random.default_rng(0))

import numpy as np
import pytest
from scipy import integrate
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import SET_A, TABLE1_EQUITY
from levy_expfun import Contract, GmdbRiskModel, KouParams, ParameterError, cte, strike_from_loss, value_at_risk
from levy_expfun import gmdb_tail_probability as tail_probability
from levy_expfun import expfun
from levy_expfun.exceptions import CancellationError, ConvergenceError
from levy_expfun.risk import _checked, cte_report, tail_probability_report, value_at_risk_report


@pytest.fixture(scope="module")
def contract_a():
    return Contract(SET_A)


def test_strike_examples(contract):
    assert strike_from_loss(contract, 0.2) == pytest.approx(228.5714286, abs=1e-7)
    assert strike_from_loss(contract, 0.6) == pytest.approx(114.2857143, abs=1e-7)
    assert strike_from_loss(contract, 0.0) == pytest.approx(contract.x, rel=1e-15)
    assert strike_from_loss(contract, 1.0) == 0.0


def test_adjusted_drift(contract):
    assert contract.adjusted.mu == pytest.approx(0.034161, abs=1e-15)
    assert contract.adjusted.sigma == contract.equity.sigma


def test_loss_at_or_above_premium(contract, expsum):
    rep = tail_probability_report(contract, expsum, 1.0)
    assert rep.value == 0.0 and rep.flags
    assert tail_probability(contract, expsum, 1.7) == 0.0


def test_negative_loss_level_rejected(contract, expsum):
    with pytest.raises(ParameterError):
        tail_probability(contract, expsum, -0.1)


def test_tail_probability_monotone(contract, expsum):
    V = np.linspace(0.0, 0.99, 50)[1:]
    vals = np.array([tail_probability(contract, expsum, v) for v in V])
    assert np.all(np.diff(vals) < 0)
    assert np.all((vals > 0) & (vals < 1))


def test_threads_do_not_change_results(contract, expsum):
    a = tail_probability(contract, expsum, 0.4, threads=1)
    b = tail_probability(contract, expsum, 0.4, threads=4)
    assert a == b


def test_var_bracket_certificate(contract_a, expsum):
    p = 0.9
    rep = value_at_risk_report(contract_a, expsum, p)
    lo, hi = (float(v) for v in rep.flags[0].split("=")[1].strip("[]").split(","))
    assert hi - lo < 1e-7 and lo <= rep.value <= hi
    assert tail_probability(contract_a, expsum, lo) > 1 - p >= tail_probability(contract_a, expsum, hi)


def test_var_monotone_and_cte_dominates(contract_a, expsum):
    ps = (0.85, 0.9, 0.95)
    vars_ = [value_at_risk(contract_a, expsum, p) for p in ps]
    assert vars_[0] < vars_[1] < vars_[2]
    for p, v in zip(ps, vars_):
        assert cte(contract_a, expsum, p, var_p=v) > v


def test_cte_by_integrating_the_tail(contract_a, expsum):
    # CTE_p = VaR_p + int_{VaR_p}^{F0} P(L > v) dv / (1 - p): only the cdf enters here.
    # Above v = 0.995 the strike drops below 1.5, where the tail is under 1e-9 and the
    # series are out of reach, so the integral stops there.
    p = 0.9
    var = value_at_risk(contract_a, expsum, p)
    assert tail_probability(contract_a, expsum, 0.995) < 1e-9
    area = integrate.quad(lambda v: tail_probability(contract_a, expsum, v), var, 0.995, epsabs=1e-10)[0]
    assert cte(contract_a, expsum, p, var_p=var) == pytest.approx(var + area / (1 - p), abs=1e-7)


def test_cte_report_carries_var(contract_a, expsum):
    rep = cte_report(contract_a, expsum, 0.9, var_p=0.35)
    assert rep.flags == ("var=0.35",) and rep.terms_used == len(expsum)
    assert set(rep.to_dict()) == {"level", "value", "imag_residual", "terms_used", "flags"}


def test_var_without_positive_losses(contract, expsum):
    assert tail_probability(contract, expsum, 0.0) < 0.9
    with pytest.raises(ParameterError):
        value_at_risk(contract, expsum, 0.1)


def test_brownian_contract_matches_small_jumps(expsum):
    pure = Contract(KouParams(0.064161, 0.16, 0.0, 0.3, 20.0, 10.0))
    tiny = Contract(KouParams(0.064161, 0.16, 1e-9, 0.3, 20.0, 10.0))
    for V in (0.2, 0.6):
        assert tail_probability(pure, expsum, V) == pytest.approx(tail_probability(tiny, expsum, V), abs=1e-6)


def test_node_failure_is_located(contract, expsum, monkeypatch):
    def boom(query, y):
        raise ConvergenceError("forced")

    monkeypatch.setattr(expfun, "cdf", boom)
    with pytest.raises(ConvergenceError) as info:
        tail_probability(contract, expsum, 0.3)
    assert info.value.where.startswith("risk node 0")


def test_imaginary_residual_gate():
    assert _checked(0.5, 1e-12, "x") == 0.5
    with pytest.raises(CancellationError):
        _checked(0.5, 1e-6, "x")


def test_invalid_contract():
    with pytest.raises(ParameterError):
        Contract(TABLE1_EQUITY, m_d=0.0)
    with pytest.raises(ParameterError):
        Contract(TABLE1_EQUITY, F0=-1.0)


def test_estimator(contract, expsum):
    model = GmdbRiskModel(expsum=expsum)
    with pytest.raises(NotFittedError):
        model.predict([0.2])
    model.fit()
    got = model.predict([0.2, 0.6])
    assert got[0] == tail_probability(contract, expsum, 0.2)
    assert got[1] == tail_probability(contract, expsum, 0.6)


def test_estimator_params_and_refit(expsum):
    model = GmdbRiskModel(expsum=expsum.to_json())
    params = model.get_params()
    assert params["lam"] == 1.0 and params["n_terms"] == 15
    twin = clone(model).set_params(mu=SET_A.mu, sigma=SET_A.sigma)
    twin.fit()
    assert twin.expsum_ == expsum
    assert twin.value_at_risk(0.9) == pytest.approx(0.187615, abs=2e-6)


def test_estimator_fits_mortality():
    model = GmdbRiskModel(n_terms=10).fit()
    assert len(model.expsum_) == 10 and model.expsum_.sup_error < 1e-4

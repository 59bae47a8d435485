import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heterour.baselines import abb_m_test, m_statistics, mz_alpha_rows
from heterour.config import TestConfig
from heterour.exceptions import InsufficientLength, NearUnitDenominator, SingularDesign


def transcribed_m(y, p):
    """M statistics written out from their definitions, y_0 = 0."""
    T = len(y)
    z = [0.0] + list(y)  # z[t] = y_t
    dy = [None] + [z[t] - z[t - 1] for t in range(1, T + 1)]
    rows, resp = [], []
    for t in range(p + 1, T + 1):
        rows.append([z[t - 1]] + [dy[t - i] for i in range(1, p + 1)])
        resp.append(dy[t])
    X, r = np.array(rows), np.array(resp)
    beta = np.linalg.solve(X.T @ X, X.T @ r)
    e = r - X @ beta
    sigma2 = float(e @ e) / len(r)
    s_ar2 = sigma2 / (1 - sum(beta[1:])) ** 2
    ssq = sum(z[t - 1] ** 2 for t in range(1, T + 1)) / T**2
    mz_alpha = (y[-1] ** 2 / T - s_ar2) / (2 * ssq)
    msb = math.sqrt(ssq / s_ar2)
    return mz_alpha, msb, mz_alpha * msb, s_ar2


def test_p_zero_uses_residual_variance():
    y = np.random.default_rng(0).standard_normal(100).cumsum()
    m = m_statistics(y, 0)
    prev = np.concatenate(([0.0], y[:-1]))
    dy = np.diff(np.concatenate(([0.0], y)))
    b = (prev @ dy) / (prev @ prev)
    e = dy - b * prev
    assert m.s_ar2 == pytest.approx(e @ e / 100, rel=1e-12)


@pytest.mark.parametrize("p", [0, 1, 3])
def test_transcription_oracle(p):
    y = np.random.default_rng(100 + p).standard_normal(100).cumsum()
    m = m_statistics(y, p)
    mz_a, msb, mz_t, s2 = transcribed_m(y, p)
    assert m.mz_alpha == pytest.approx(mz_a, abs=1e-10)
    assert m.msb == pytest.approx(msb, abs=1e-10)
    assert m.mz_t == pytest.approx(mz_t, abs=1e-10)
    assert m.s_ar2 == pytest.approx(s2, rel=1e-10)


def test_batched_rows_agree():
    rng = np.random.default_rng(4)
    Y = rng.standard_normal((5, 80)).cumsum(axis=1)
    for p in (0, 2):
        rows = mz_alpha_rows(Y, p)
        for i in range(5):
            assert rows[i] == pytest.approx(m_statistics(Y[i], p).mz_alpha, rel=1e-9)


def test_msb_recomputation_random_walk():
    y = np.random.default_rng(6).standard_normal(120).cumsum()
    m = m_statistics(y)
    prev = np.concatenate(([0.0], y[:-1]))
    assert m.msb**2 == pytest.approx((prev @ prev) / 120**2 / m.s_ar2, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 4), st.integers(20, 120))
def test_mz_t_identity(seed, p, T):
    y = np.random.default_rng(seed).standard_normal(T).cumsum()
    m = m_statistics(y, p)
    assert abs(m.mz_t - m.mz_alpha * m.msb) <= 1e-12 * max(1.0, abs(m.mz_t))
    assert m.msb >= 0 and m.s_ar2 > 0 and m.lag_p == p


def test_errors():
    with pytest.raises(InsufficientLength):
        m_statistics(np.arange(1.0, 12.0), 2)
    with pytest.raises(SingularDesign):
        m_statistics(np.zeros(30))


def test_near_unit_denominator(monkeypatch):
    import heterour.baselines as bl

    real = np.linalg.lstsq

    def fake(x, r, rcond=None):
        beta, *rest = real(x, r, rcond=rcond)
        beta = beta.copy()
        beta[1:] = 1.0 / (len(beta) - 1)
        return (beta, *rest)

    monkeypatch.setattr(bl.np.linalg, "lstsq", fake)
    y = np.random.default_rng(1).standard_normal(50).cumsum()
    with pytest.raises(NearUnitDenominator):
        m_statistics(y, 2)


def test_abb_m_test_contract():
    y = np.random.default_rng(9).standard_normal(100).cumsum()
    cfg = TestConfig(B=99, seed=4, block=2, bandwidth=0.3)
    a = abb_m_test(y, cfg)
    b = abb_m_test(y, cfg)
    assert list(a.statistic) == ["mz"]
    assert a.statistic["mz"] == pytest.approx(m_statistics(y).mz_alpha, rel=1e-10)
    np.testing.assert_array_equal(a.draws["mz"], b.draws["mz"])
    assert a.p_value == b.p_value
    expect = np.count_nonzero(a.draws["mz"] < a.statistic["mz"]) / 99
    assert a.p_value["mz"] == expect


def test_abb_m_test_extreme_statistic():
    # a strongly mean-reverting series sits far below every unit-root draw
    y = np.random.default_rng(2).standard_normal(100)
    res = abb_m_test(y, TestConfig(B=99, seed=1, block=1, bandwidth=0.3))
    assert res.statistic["mz"] < res.draws["mz"].min()
    assert res.p_value["mz"] == 0.0


@pytest.mark.slow
def test_mz_bootstrap_size_under_null():
    from heterour.dgp import DgpSpec, mc_size_power

    spec = DgpSpec(c=0, vol_case="one-shift", sigma1=5, T=100)
    rep = mc_size_power(spec, TestConfig(stat="mz", B=499, block=1), 500, 0.05, 2025)
    assert 0.02 <= rep.rejection_rate["mz"] <= 0.10

import json
import math

import numpy as np
import pytest

from roughbarrier.bounds import DensityBoundParams, cdf_bound
from roughbarrier.decay import (
    DEFAULT_MATURITIES, DecayReport, DecayRow, decay_scan, default_c2, fit_gaussian_rate,
    fit_polynomial_rate, verify_dominance,
)
from roughbarrier.errors import InsufficientData, InvalidArgument
from roughbarrier.pricing import BarrierContract, bs_hit_probability
from roughbarrier.vol import ConstantVolParams, RoughBergomiParams

T = np.array(DEFAULT_MATURITIES)
EX1 = RoughBergomiParams(0.2, 0.5, 0.2, -0.3, truncation_n=5)


def _row(T, hit, se=0.0, bound=1.0):
    return DecayRow(T=T, seed=0, n_paths=10, n_hits=0, hit=hit, hit_se=se, barrier=0.0, barrier_se=0.0,
                    european=0.0, european_se=0.0, m_hat=0.0, concentration=bound, cdf=bound, combined=bound)


# -- rate fits on synthetic inputs ------------------------------------------

def test_power_law_slopes():
    fit = fit_polynomial_rate(T, T ** 2)
    np.testing.assert_allclose(fit.slopes, 2.0, atol=1e-12)
    assert not fit.superpolynomial and not fit.beyond_noise
    assert fit.excluded == []


def test_exponential_decay_is_superpolynomial():
    fit = fit_polynomial_rate(T, np.exp(-1.0 / T))
    assert fit.superpolynomial and fit.beyond_noise
    expected = (-1 / T[1:] + 1 / T[:-1]) / np.diff(np.log(T))
    np.testing.assert_allclose(fit.slopes, expected, rtol=1e-12)


def test_gaussian_rate_synthetic():
    fit = fit_gaussian_rate(T, 0.0, 0.1, np.exp(-0.02 / T))
    assert fit.slope == pytest.approx(-0.02, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.C2_hat == pytest.approx(0.01 / 0.02)


def test_gaussian_rate_constant_vol_closed_form():
    s, b = 0.2, math.log(11 / 10)
    P = np.array([bs_hit_probability(0.0, b, t, s) for t in T])
    fit = fit_gaussian_rate(T, 0.0, b, P)
    assert fit.slope < 0 and fit.C2_hat <= 2 * s * s * 1.1


def test_noise_rows_excluded():
    P = np.array([0.5, 0.3, 0.1, 0.01, 1e-5, 0.0])
    SE = np.array([1e-3, 1e-3, 1e-3, 1e-3, 1e-5, 0.0])
    fit = fit_polynomial_rate(T, P, SE)
    assert fit.excluded == [0.025, 0.01]
    assert len(fit.slopes) == 3


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_polynomial_rate(T[:2], T[:2] ** 2)
    with pytest.raises(InsufficientData):
        fit_gaussian_rate(T, 0.0, 0.1, np.array([0.5, 0.1, 0, 0, 0, 0]))


# -- dominance -------------------------------------------------------------------

def test_dominance_examples():
    rep = DecayReport([_row(0.5, 0.4, 0.01), _row(0.1, 0.2, 0.01)], 0.0, 0.1)
    assert verify_dominance(rep).ok
    rep = DecayReport([_row(0.5, 0.0, 0.0, bound=0.0)], 0.0, 0.1)
    assert verify_dominance(rep).ok
    rep = DecayReport([_row(0.5, 0.4, 0.01, bound=0.3), _row(0.1, 0.2, 0.01, bound=0.3)], 0.0, 0.1)
    res = verify_dominance(rep)
    assert not res.ok and res.failed_rows == [0.5]
    # within two standard errors passes
    rep = DecayReport([_row(0.5, 0.31, 0.01, bound=0.3)], 0.0, 0.1)
    assert verify_dominance(rep, "cdf").ok
    with pytest.raises(InvalidArgument):
        verify_dominance(rep, "other")


# -- report ------------------------------------------------------------------------

def test_report_requires_decreasing_maturities():
    with pytest.raises(InvalidArgument):
        DecayReport([_row(0.1, 0.1), _row(0.5, 0.1)], 0.0, 0.1)


@pytest.fixture(scope="module")
def small_scan():
    c = BarrierContract(10, 9.5, 11, 0.5)
    dens = DensityBoundParams(3.0, default_c2(EX1))
    return decay_scan(EX1, c, DEFAULT_MATURITIES, n_paths=20_000, n_steps=64, seed=5, density=dens)


def test_report_round_trips(small_scan):
    text = small_scan.to_csv(["units: prices in currency, probabilities unitless"])
    back = DecayReport.from_csv(text, small_scan.x, small_scan.b, small_scan.constants)
    assert back == small_scan
    assert back.to_csv(["units: prices in currency, probabilities unitless"]) == text
    d = json.loads(json.dumps(small_scan.to_dict()))
    assert DecayReport.from_dict(d) == small_scan


def test_scan_row_contents(small_scan):
    rep = small_scan
    assert rep.constants == {"c1": 3.0, "c2": default_c2(EX1)}
    assert len({r.seed for r in rep.rows}) == len(rep.rows)
    for r in rep.rows:
        assert r.combined == min(r.concentration, r.cdf)
        assert r.cdf == cdf_bound(rep.b, rep.x, r.T, DensityBoundParams(3.0, default_c2(EX1)))
        assert r.barrier <= r.european
        assert 0 <= r.hit <= 1 and r.n_hits <= r.n_paths
    hit, se = rep.column("hit"), rep.column("hit_se")
    assert np.all(hit[1:] <= hit[:-1] + 3 * (se[1:] + se[:-1]))


def test_scan_is_reproducible(small_scan):
    c = BarrierContract(10, 9.5, 11, 0.5)
    again = decay_scan(EX1, c, DEFAULT_MATURITIES[:2], n_paths=20_000, n_steps=64, seed=5,
                       density=DensityBoundParams(3.0, default_c2(EX1)), workers=2)
    assert again.rows == small_scan.rows[:2]


def test_scan_without_bounds_is_vacuous():
    raw = RoughBergomiParams(0.2, 0.5, 0.2, -0.3)
    rep = decay_scan(raw, BarrierContract(10, 9.5, 11, 0.5), [0.1], n_paths=500, n_steps=16, seed=1)
    assert rep.rows[0].concentration == 1.0 and rep.rows[0].cdf == 1.0 and default_c2(raw) is None


@pytest.mark.parametrize("kw", [dict(T_grid=[]), dict(T_grid=[0.1, 0.5]), dict(T_grid=[2.0]),
                                dict(center="median")])
def test_scan_rejects(kw):
    args = dict(model=EX1, contract=BarrierContract(10, 9.5, 11, 0.5), T_grid=[0.1], n_paths=10, n_steps=4) | kw
    with pytest.raises(InvalidArgument):
        decay_scan(**args)


def test_scan_rejects_barrier_below_spot():
    with pytest.raises(InvalidArgument, match="B > S0"):
        decay_scan(EX1, BarrierContract(10, 9.5, 9, 0.5), [0.1], n_paths=10, n_steps=4)


# -- short-maturity limits on the three example contracts -------------------------

def _scan(K):
    return decay_scan(EX1, BarrierContract(10, K, 11, 0.5), DEFAULT_MATURITIES, n_paths=20_000,
                      n_steps=64, seed=9)


def test_in_the_money_limits():
    rep = _scan(9.5)
    eu, bar = rep.column("european"), rep.column("barrier")
    assert abs(eu[-1] - 0.5) < 0.02
    assert bar[-1] < 1e-4 and np.all(np.diff(bar) < 0)


def test_at_the_money_limits():
    rep = _scan(10.0)
    eu, bar = rep.column("european"), rep.column("barrier")
    # at the money the vanilla vanishes like sigma0 S0 sqrt(T / 2 pi)
    assert eu[-1] == pytest.approx(0.2 * 10 * math.sqrt(0.01 / (2 * math.pi)), rel=0.1)
    assert bar[-1] < 1e-4
    assert np.all(np.diff(eu) < 0) and np.all(np.diff(bar) < 0)


def test_out_of_the_money_limits():
    rep = _scan(11.0)
    eu, bar = rep.column("european"), rep.column("barrier")
    assert eu[-1] < 1e-4 and bar[-1] < 1e-4
    assert np.all(bar <= eu)
    # relative speed: barrier price falls at least as fast as the vanilla
    assert bar[-2] / bar[0] <= eu[-2] / eu[0] * 1.0001

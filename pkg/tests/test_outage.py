import numpy as np
import pytest
from scipy import stats

from zfstats.config import default_settings, network_config
from zfstats.distributions import (Family, gamma_from_moments, lognormal_from_moments,
                                   normal_from_moments)
from zfstats.montecarlo import CampaignSpec, run_campaign
from zfstats.outage import (analytic_outage, default_rate_grid, empirical_outage, outage_case1,
                            outage_case2, outage_curve, rmse, sinr_threshold)
from zfstats.precoder import Normalization

from conftest import small_config


def gamma(shape, scale):
    return gamma_from_moments(shape * scale, shape * scale * scale)


def brute_force(rng, sig, intf, noise, r0, n=10**7):
    s = rng.gamma(sig.params[0], sig.params[1], n)
    if intf.family is Family.GAMMA:
        i = rng.gamma(intf.params[0], intf.params[1], n)
    else:
        i = rng.lognormal(intf.params[0], intf.params[1], n)
    return np.mean(s <= np.expm1(r0) * (i + noise))


def test_threshold_uses_natural_log():
    assert sinr_threshold(np.log(2.0)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sinr_threshold(-0.1)


def test_case1_point_mass_interference():
    sig = gamma(2.0, 1.0)
    got = outage_case1(sig, None, 0.7, 1.3)
    assert got == pytest.approx(sig.cdf(np.expm1(1.3) * 0.7), abs=1e-15)


def test_case1_vanishing_interference_limit():
    sig = gamma(2.0, 1.0)
    tiny = gamma_from_moments(1e-9, 1e-20)
    assert outage_case1(sig, tiny, 0.7, 1.3) == pytest.approx(outage_case1(sig, None, 0.7, 1.3),
                                                              abs=1e-8)


def test_case1_small_rate_limit():
    got = outage_case1(gamma(2.0, 1.0), gamma(2.0, 1.0), 1.0, np.array([1e-8, 1e-4]))
    assert got[0] < 1e-12 and got[1] < got[0] + 1e-6


def test_case1_matches_brute_force(rng):
    sig, intf = gamma(2.0, 1.0), gamma(2.0, 1.0)
    got = outage_case1(sig, intf, 1.0, np.log(2.0))
    assert got == pytest.approx(brute_force(rng, sig, intf, 1.0, np.log(2.0)), abs=3e-3)


def test_case1_rejects_normal_interference():
    with pytest.raises(ValueError):
        outage_case1(gamma(2, 1), normal_from_moments(1.0, 1.0), 1.0, 0.5)


@pytest.mark.parametrize("intf", [gamma(3.0, 0.5), lognormal_from_moments(1.5, 0.8)])
def test_case1_monotone_in_rate(intf):
    rates = np.linspace(0.0, 6.0, 100)
    p = outage_case1(gamma(4.0, 1.0), intf, 0.3, rates)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) >= -1e-12)


def test_case1_monotone_in_signal_scale():
    scales = np.geomspace(0.1, 10, 15)
    p = outage_case1(gamma_from_moments(3 * scales, 3 * scales**2), gamma(2.0, 1.0), 1.0, 1.0)
    assert np.all(np.diff(p) <= 1e-12)


def test_quadrature_self_consistency():
    sig, intf = gamma(5.0, 0.4), lognormal_from_moments(2.0, 3.0)
    rates = np.linspace(0.05, 3.0, 9)
    v1, e1 = outage_case1(sig, intf, 0.5, rates, quad_tol=1e-8, return_error=True)
    v2 = outage_case1(sig, intf, 0.5, rates, quad_tol=5e-9)
    assert np.max(np.abs(v1 - v2)) <= e1 + 1e-15


def test_case1_batched_matches_loop():
    shapes = np.array([2.0, 5.0, 11.0])
    sig = gamma_from_moments(shapes * 0.1, shapes * 0.01)
    intf = gamma_from_moments(np.array([0.2, 0.05, 0.4]), np.array([0.01, 0.002, 0.05]))
    rates = np.array([0.1, 1.0, 2.0])
    batch = outage_case1(sig, intf, 0.05, rates)
    assert batch.shape == (3, 3)
    for j in range(3):
        single = outage_case1(gamma_from_moments(shapes[j] * 0.1, shapes[j] * 0.01),
                              gamma_from_moments(intf.matched_mean[j], intf.matched_variance[j]),
                              0.05, rates)
        np.testing.assert_allclose(batch[j], single, atol=1e-9)


def _grid_2d(sig, intf, noise, r0, n=2000):
    s_ref = stats.gamma(sig.params[0], scale=sig.params[1])
    if intf.family is Family.GAMMA:
        i_ref = stats.gamma(intf.params[0], scale=intf.params[1])
    else:
        i_ref = stats.lognorm(intf.params[1], scale=np.exp(intf.params[0]))
    s_edges = np.linspace(0, s_ref.isf(1e-9), n + 1)
    i_edges = np.linspace(0, i_ref.isf(1e-9), n + 1)
    s_mid, i_mid = 0.5 * (s_edges[1:] + s_edges[:-1]), 0.5 * (i_edges[1:] + i_edges[:-1])
    ws = s_ref.pdf(s_mid) * np.diff(s_edges)
    wi = i_ref.pdf(i_mid) * np.diff(i_edges)
    inside = s_mid[None, :] <= np.expm1(r0) * (i_mid[:, None] + noise)
    return float(wi @ (inside * ws[None, :]).sum(axis=1))


def test_case1_matches_2d_grid():
    sig, intf = gamma(2.0, 1.0), gamma(2.0, 1.0)
    got = outage_case1(sig, intf, 1.0, np.log(2.0))
    assert got == pytest.approx(_grid_2d(sig, intf, 1.0, np.log(2.0)), abs=1e-3)


def test_case2_noise_limited():
    assert outage_case2(1.0, gamma(2.0, 1.0), 2.0, np.log(2.0)) == 1.0
    assert outage_case2(1.0, None, 2.0, np.log(2.0)) == 1.0
    assert outage_case2(1.0, None, 0.5, np.log(2.0)) == 0.0


def test_case2_exponential_tail():
    # t = S / (e^R0 - 1) - noise = ln 2 -> P{I > ln 2} = 1/2 for a unit exponential.
    got = outage_case2(1.0, gamma(1.0, 1.0), 1.0 - np.log(2.0), np.log(2.0))
    assert got == pytest.approx(0.5, abs=1e-14)


def test_case2_gamma_tail_closed_form():
    intf = gamma(3.0, 0.5)
    s, noise, r0 = 4.0, 0.2, 0.8
    t = s / np.expm1(r0) - noise
    assert outage_case2(s, intf, noise, r0) == pytest.approx(stats.gamma(3.0, scale=0.5).sf(t),
                                                             abs=1e-13)


def test_case2_limits_and_monotone():
    intf = lognormal_from_moments(1.0, 0.5)
    assert outage_case2(5.0, intf, 0.1, 50.0) == 1.0
    assert outage_case2(5.0, intf, 0.1, 1e-12) < 1e-12
    rates = np.linspace(0.0, 5.0, 100)
    p = outage_case2(5.0, intf, 0.1, rates)
    assert np.all((p >= 0) & (p <= 1)) and np.all(np.diff(p) >= 0)


def test_empirical_examples():
    assert empirical_outage(np.full(10, 1e9), np.ones(10), 1.0, 1.0) == 0.0
    assert empirical_outage(np.ones(5), np.ones(5), 1.0, np.log(1.5)) == 1.0
    with pytest.raises(ValueError):
        empirical_outage(np.ones(5), np.ones(4), 1.0, 1.0)


def test_empirical_counts_ties():
    s = np.array([1.0, 2.0, 3.0, 4.0])
    rates = np.log1p(s / 2.0)  # I + noise = 2
    np.testing.assert_allclose(empirical_outage(s, np.ones(4), 1.0, rates), [0.25, 0.5, 0.75, 1.0])


def test_empirical_agrees_with_quadrature(rng):
    sig, intf = gamma(3.0, 1.0), lognormal_from_moments(1.0, 0.5)
    n = 10**7
    s = rng.gamma(3.0, 1.0, n)
    i = rng.lognormal(intf.params[0], intf.params[1], n)
    rates = np.array([0.3, 0.8, 1.5])
    np.testing.assert_allclose(empirical_outage(s, i, 0.5, rates),
                               outage_case1(sig, intf, 0.5, rates), atol=3e-3)


def test_rmse_examples():
    assert rmse([0.1, 0.2], [0.1, 0.2]) == 0.0
    assert rmse([0, 0], [0.1, 0.1]) == pytest.approx(0.1)
    assert rmse(np.zeros(7), np.full(7, 0.03)) == pytest.approx(0.03, rel=1e-15)
    with pytest.raises(ValueError):
        rmse([0, 0], [1])


def test_default_rate_grid_covers_band():
    sig, intf = gamma(3.0, 1.0), gamma(2.0, 0.5)
    grid = default_rate_grid(lambda r: outage_case1(sig, intf, 0.2, r), n=40)
    p = outage_case1(sig, intf, 0.2, grid)
    assert grid.size == 40 and np.all(np.diff(grid) > 0)
    assert p[0] == pytest.approx(0.01, abs=5e-3)
    assert p[-1] == pytest.approx(0.99, abs=5e-3)


def test_analytic_outage_uses_gamma_signal():
    ell, itf = np.array([1e-6]), np.array([[1e-8, 2e-8]])
    got = analytic_outage(1, Family.GAMMA, 1.0, 12, 10, 1e-9, ell, itf, np.array([1.0]))
    assert got.shape == (1, 1) and 0 < got[0, 0] < 1


def test_single_cell_reduces_to_noise_only():
    cfg = small_config(q=1, k=2, m=4, side=100.0, excl=5.0, p=1.0, noise=1e-5, alpha=3.0)
    spec = CampaignSpec(cfg, num_drops=1, fadings_per_drop=20000, antenna_sweep=(4,),
                        outputs=frozenset({"outage"}), families=(Family.GAMMA,))
    res = run_campaign(spec)
    for case in Normalization:
        summ = res.outage[(4, case, Family.GAMMA)]
        assert summ.rmse <= 0.005
    # The analytic curve is the plain signal CDF at the noise floor.
    summ = res.outage[(4, Normalization.INSTANTANEOUS, Family.GAMMA)]
    ell = res.gains[0, 0, 0]  # (K,)
    curve = outage_curve(1, Family.GAMMA, 1.0, 4, 2, 1e-5, ell, np.empty((2, 0)), summ.rates)
    sig = gamma_from_moments((4 - 2 + 1) * ell / 2, (4 - 2 + 1) * (ell / 2) ** 2).reshaped((2, 1))
    np.testing.assert_allclose(curve.analytic, sig.cdf(np.expm1(summ.rates) * 1e-5), atol=1e-15)
    np.testing.assert_allclose(summ.analytic_mean, curve.analytic_mean, atol=1e-15)


def test_outage_curve_rmse():
    rng = np.random.default_rng(3)
    cfg = network_config(default_settings(), 20)
    ell, itf = np.array([1e-7, 5e-8]), np.array([[1e-9, 3e-10], [2e-9, 1e-10]])
    s = rng.gamma(11, ell[:, None] * cfg.tx_power / 10, (2, 50000))
    i = rng.exponential(1e-9, (2, 50000))
    curve = outage_curve(1, Family.GAMMA, cfg.tx_power, 20, 10, cfg.noise_power, ell, itf,
                         np.linspace(0.1, 8, 20), s, i)
    assert curve.analytic.shape == curve.empirical.shape == (2, 20)
    assert curve.rmse == pytest.approx(rmse(curve.analytic_mean, curve.empirical_mean))

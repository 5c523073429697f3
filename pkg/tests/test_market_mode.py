import numpy as np
import pytest

from rmtfof.errors import InputError, NumericalError
from rmtfof.market_mode import adjusted_sigma2, analyze_market, market_series, remove_market
from rmtfof.panel import normalize
from rmtfof.spectral import SpectralDecomposition, correlation, eigendecompose, mp_bounds
from rmtfof.synthetic import FactorSpec, factor_panel, iid_panel

from conftest import panel_from


def _decomp_with_top(u):
    u = np.asarray(u, dtype=float)
    n = u.size
    vecs = np.eye(n)
    vecs[:, 0] = u
    return SpectralDecomposition(np.arange(n, 0, -1.0), vecs)


def test_market_series_unit_vector():
    p = panel_from([[0.1, 0.2, 0.3], [1.0, 2.0, 4.0]])
    np.testing.assert_array_equal(market_series(p, [1.0, 0.0]), [0.1, 0.2, 0.3])


def test_market_series_uniform_over_identical_funds():
    base = np.array([0.01, -0.02, 0.03, 0.0])
    p = panel_from(np.tile(base, (4, 1)))
    np.testing.assert_allclose(market_series(p, np.full(4, 0.5)), 2.0 * base, atol=1e-15)


def test_market_series_hand_case():
    p = panel_from([[1.0, 2.0], [3.0, -1.0], [0.0, 5.0]])
    u = np.array([0.6, 0.0, -0.8])
    # period 1: 0.6*1 - 0.8*0 ; period 2: 0.6*2 - 0.8*5
    np.testing.assert_allclose(market_series(p, u), [0.6, 1.2 - 4.0], atol=1e-15)


def test_market_series_dimension_mismatch():
    with pytest.raises(InputError):
        market_series(panel_from([[1.0, 2.0], [3.0, 4.0]]), [1.0])


def test_proportional_fund_leaves_no_residual():
    m = np.array([0.01, -0.03, 0.02, 0.05, -0.01])
    other = np.array([0.3, 0.1, -0.2, 0.0, 0.4])
    p = panel_from([m, other])
    reg = remove_market(p, _decomp_with_top([1.0, 0.0]))
    assert np.max(np.abs(reg.residual_panel.returns[0])) < 1e-10
    assert reg.betas[0] == pytest.approx(1.0)


def test_orthogonal_fund_keeps_centered_series():
    m = np.array([1.0, -1.0, 1.0, -1.0])
    f = np.array([2.0, 2.0, 0.0, 0.0])  # centered (1,1,-1,-1) is orthogonal to m
    reg = remove_market(panel_from([m, f]), _decomp_with_top([1.0, 0.0]))
    assert abs(reg.betas[1]) < 1e-12
    np.testing.assert_allclose(reg.residual_panel.returns[1], [1, 1, -1, -1], atol=1e-12)


def test_residual_invariants(rng):
    p = panel_from(rng.standard_normal((6, 30)) + rng.standard_normal(30))
    d = eigendecompose(correlation(normalize(p)))
    reg = remove_market(p, d)
    mc = reg.market_series - reg.market_series.mean()
    eps = reg.residual_panel.returns
    assert np.max(np.abs(eps @ mc)) < 1e-8
    assert np.max(np.abs(eps.mean(axis=1))) < 1e-10


def test_zero_variance_market():
    p = panel_from([[1.0, 1.0, 1.0], [1.0, 2.0, 0.0]])
    with pytest.raises(NumericalError):
        remove_market(p, _decomp_with_top([1.0, 0.0]))


def test_planted_factor_top_eigenvalue_drops():
    spec = FactorSpec(20, 120, (("a", 20, 1.0),), 1.0, seed=3)
    panel, _ = factor_panel(spec)
    rep = analyze_market(panel)
    assert rep.residual_decomposition.eigenvalues[0] < rep.raw_decomposition.eigenvalues[0]


def test_adjusted_sigma2_reference_values():
    s2 = adjusted_sigma2(10.9886, 49)
    assert s2 == pytest.approx(0.77574, abs=1e-5)
    raw = mp_bounds(2.143, 1.0).lambda_plus
    adj = mp_bounds(2.143, s2).lambda_plus
    assert raw == pytest.approx(2.8329, abs=1e-3)
    assert adj == pytest.approx(2.1975, abs=1e-3)


def test_adjusted_sigma2_trivial():
    assert adjusted_sigma2(0.0, 49) == 1.0
    assert adjusted_sigma2(24.5, 49) == 0.5
    with pytest.raises(InputError):
        adjusted_sigma2(49.0, 49)
    with pytest.raises(InputError):
        adjusted_sigma2(-1.0, 49)


def test_adjusted_band_never_widens(rng):
    # lambda_plus shrinks monotonically as more variance is attributed to the top mode
    lp = [mp_bounds(2.0, adjusted_sigma2(x, 30)).lambda_plus for x in np.linspace(0, 29, 40)]
    assert np.all(np.diff(lp) < 0)
    panel = iid_panel(30, 60, seed=4)
    rep = analyze_market(panel)
    lam = rep.residual_decomposition.eigenvalues
    bulk_adj = np.sum((lam >= rep.adjusted_bounds.lambda_minus) & (lam <= rep.adjusted_bounds.lambda_plus))
    unit = mp_bounds(panel.q, 1.0)
    bulk_unit = np.sum((lam >= unit.lambda_minus) & (lam <= unit.lambda_plus))
    assert bulk_adj <= bulk_unit


def test_analyze_report_json():
    panel, _ = factor_panel(FactorSpec(12, 80, (("a", 6, 1.0), ("b", 6, 0.5)), 1.0, seed=1))
    js = analyze_market(panel).to_json()
    assert set(js) >= {"alphas", "betas", "lambda_plus_adjusted", "deviating_after_removal"}
    assert len(js["betas"]) == 12
    assert js["lambda_plus_adjusted"] < js["lambda_plus_raw"]


def test_two_mode_stripping():
    panel, _ = factor_panel(FactorSpec(12, 80, (("a", 6, 1.0), ("b", 6, 0.8)), 1.0, seed=2))
    one = analyze_market(panel, 1)
    two = analyze_market(panel, 2)
    assert two.adjusted_bounds.sigma2 < one.adjusted_bounds.sigma2
    with pytest.raises(InputError):
        analyze_market(panel, 0)

import numpy as np
import pytest
from scipy.stats import ortho_group

from rmtfof.cleaning import NoBulkWarning, clean
from rmtfof.panel import normalize
from rmtfof.spectral import CorrelationMatrix, correlation, eigendecompose, mp_bounds
from rmtfof.synthetic import factor_panel, iid_panel, taxonomy_spec

from conftest import panel_from


def random_corr(rng, n, t):
    return correlation(normalize(panel_from(rng.standard_normal((n, t)) + 0.5 * rng.standard_normal(t))))


def labelled(values):
    return CorrelationMatrix(tuple(f"f{i}" for i in range(len(values))), np.asarray(values))


def test_identity_unchanged():
    cm = clean(labelled(np.eye(6)), mp_bounds(2.0))
    np.testing.assert_allclose(cm.values, np.eye(6), atol=1e-14)
    assert cm.kept_indices == ()
    assert cm.bulk_average == pytest.approx(1.0)


def test_reference_deviators_are_kept():
    rng = np.random.default_rng(5)
    bulk = rng.uniform(0.2, 2.5, 46)
    lam = np.concatenate([[10.9886, 8.2898, 2.944], bulk])
    lam *= 49 / lam.sum()
    lam[:3] = [10.9886, 8.2898, 2.944]
    q = ortho_group.rvs(49, random_state=7)
    c = labelled((q * lam) @ q.T)
    cm = clean(c, mp_bounds(2.143))
    assert cm.kept_indices == (0, 1, 2)
    pre = np.sort(np.linalg.eigvalsh(cm.pre_renormalization))[::-1]
    np.testing.assert_allclose(pre[:3], [10.9886, 8.2898, 2.944], atol=1e-10)
    np.testing.assert_allclose(pre[3:], cm.bulk_average, atol=1e-10)


def test_random_matrix_trace_and_eigenvectors(rng):
    c = random_corr(rng, 10, 30)
    d = eigendecompose(c)
    cm = clean(c, mp_bounds(3.0))
    assert abs(np.trace(cm.pre_renormalization) - 10) < 1e-8
    # same eigenvectors: U' C_pre U is diagonal
    rot = d.eigenvectors.T @ cm.pre_renormalization @ d.eigenvectors
    assert np.max(np.abs(rot - np.diag(np.diag(rot)))) < 1e-10


def test_cleaned_is_valid_correlation(rng):
    for _ in range(10):
        c = random_corr(rng, 15, 40)
        v = clean(c, mp_bounds(40 / 15)).values
        assert np.max(np.abs(v - v.T)) < 1e-12
        assert np.max(np.abs(np.diag(v) - 1)) < 1e-10
        assert np.all(np.abs(v) <= 1 + 1e-10)
        assert np.linalg.eigvalsh(v).min() >= -1e-8


def test_no_renormalize_keeps_raw_reconstruction(rng):
    c = random_corr(rng, 8, 30)
    cm = clean(c, mp_bounds(30 / 8), renormalize=False)
    assert np.array_equal(cm.values, cm.pre_renormalization)
    assert not cm.renormalized


def test_no_bulk_returns_unchanged():
    c = labelled(np.array([[1.0, 0.9], [0.9, 1.0]]))
    b = mp_bounds(1.0)  # band [0, 4]: move it below both eigenvalues
    from rmtfof.spectral import MPBounds

    tight = MPBounds(b.q, b.sigma2, 0.0, 0.05)
    with pytest.warns(NoBulkWarning):
        cm = clean(c, tight)
    assert cm.unchanged and cm.bulk_average is None
    np.testing.assert_array_equal(cm.values, c.values)


def test_idempotent_on_synthetic_panels():
    # flattening is a projection; diagonal rescaling afterwards is the only drift
    for seed in range(5):
        panel, _ = factor_panel(taxonomy_spec(seed=seed))
        c = correlation(normalize(panel))
        b = mp_bounds(panel.q)
        once = clean(c, b, renormalize=False)
        twice = clean(once.as_correlation(), b, renormalize=False)
        assert np.max(np.abs(twice.values - once.values)) < 1e-6
        assert twice.kept_indices == once.kept_indices


def test_iid_panel_cleans_to_near_identity():
    panel = iid_panel(30, 90, seed=9)
    cm = clean(correlation(normalize(panel)), mp_bounds(panel.q))
    off = cm.values - np.eye(30)
    assert np.max(np.abs(off)) < 0.2
    assert cm.to_json()["kept_indices"] == list(cm.kept_indices)

"""Regress out the dominant common mode and re-derive the noise band."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .panel import ReturnsPanel, normalize
from .spectral import (
    DeviationReport,
    MPBounds,
    SpectralDecomposition,
    classify,
    correlation,
    eigendecompose,
    mp_bounds,
)


@dataclass(frozen=True)
class MarketRegression:
    alphas: np.ndarray
    betas: np.ndarray
    market_series: np.ndarray
    residual_panel: ReturnsPanel


def market_series(panel: ReturnsPanel, u_large) -> np.ndarray:
    """Per-period sum of raw returns weighted by the top eigenvector."""
    u = np.asarray(u_large, dtype=np.float64)
    if u.shape != (panel.n_funds,):
        raise InputError(f"eigenvector has length {u.size}, panel has {panel.n_funds} funds")
    return u @ panel.returns


def remove_market(panel: ReturnsPanel, decomp: SpectralDecomposition) -> MarketRegression:
    """OLS of every fund's raw returns on the market series; keep the residuals."""
    m = market_series(panel, decomp.eigenvectors[:, 0])
    mc = m - m.mean()
    var = float(mc @ mc)
    if var <= 0.0 or var <= 1e-24 * float(m @ m):
        raise NumericalError("market series has zero variance")
    G = panel.returns
    means = G.mean(axis=1)
    betas = (G - means[:, None]) @ mc / var
    alphas = means - betas * m.mean()
    resid = G - alphas[:, None] - betas[:, None] * m[None, :]
    # OLS residuals are mean-zero in exact arithmetic; remove rounding drift
    resid = resid - resid.mean(axis=1, keepdims=True)
    return MarketRegression(
        alphas, betas, m, ReturnsPanel(panel.fund_ids, panel.period_labels, resid)
    )


def adjusted_sigma2(lambda_large: float, n: int) -> float:
    """Variance left after the top mode, ``1 - lambda_large / n``."""
    if lambda_large < 0:
        raise InputError(f"lambda_large must be non-negative, got {lambda_large}")
    if lambda_large >= n:
        raise InputError(f"lambda_large={lambda_large} must be below n={n}")
    return 1.0 - lambda_large / n


@dataclass(frozen=True)
class MarketRemovalReport:
    regression: MarketRegression
    raw_decomposition: SpectralDecomposition
    residual_decomposition: SpectralDecomposition
    raw_bounds: MPBounds
    adjusted_bounds: MPBounds
    deviations: DeviationReport

    def to_json(self) -> dict:
        d = self.deviations
        lam = self.residual_decomposition.eigenvalues
        return {
            "alphas": self.regression.alphas.tolist(),
            "betas": self.regression.betas.tolist(),
            "lambda_large": float(self.raw_decomposition.eigenvalues[0]),
            "sigma2_adjusted": self.adjusted_bounds.sigma2,
            "lambda_plus_raw": self.raw_bounds.lambda_plus,
            "lambda_plus_adjusted": self.adjusted_bounds.lambda_plus,
            "lambda_minus_adjusted": self.adjusted_bounds.lambda_minus,
            "deviating_after_removal": list(d.deviating_above),
            "deviating_after_removal_values": [float(lam[k]) for k in d.deviating_above],
            "residual_eigenvalues": lam.tolist(),
        }


def analyze_market(panel: ReturnsPanel, n_modes: int = 1) -> MarketRemovalReport:
    """Strip ``n_modes`` leading modes one at a time, then classify the residual spectrum.

    Each pass regresses on the top eigenvector of the current residual panel.
    The band keeps Q = T/N; sigma2 drops the share of the raw trace carried by
    the stripped modes.
    """
    if n_modes < 1:
        raise InputError(f"n_modes must be >= 1, got {n_modes}")
    raw = eigendecompose(correlation(normalize(panel)))
    current, decomp = panel, raw
    for _ in range(n_modes):
        reg = remove_market(current, decomp)
        current = reg.residual_panel
        decomp = eigendecompose(correlation(normalize(current)))
    sigma2 = adjusted_sigma2(float(raw.eigenvalues[:n_modes].sum()), panel.n_funds)
    raw_bounds = mp_bounds(panel.q, 1.0)
    adj = mp_bounds(panel.q, sigma2)
    return MarketRemovalReport(reg, raw, decomp, raw_bounds, adj, classify(decomp, adj))

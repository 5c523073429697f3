"""Random-matrix denoising of fund return correlations and long-only
Markowitz noise-risk experiments."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .cleaning import CleanedMatrix, clean
from .eig_analysis import IPRSpectrum, StrategyContribution, ipr, ipr_spectrum, strategy_contribution
from .errors import (
    ConvergenceError,
    InfeasibleTargetError,
    InputError,
    NumericalError,
    RMTError,
    SingularSystemError,
)
from .market_mode import (
    MarketRegression,
    adjusted_sigma2,
    analyze_market,
    market_series,
    remove_market,
)
from .panel import (
    NormalizedPanel,
    ReturnsPanel,
    StrategyMap,
    load_returns,
    load_strategies,
    normalize,
    split,
    write_returns,
)
from .portfolio import (
    CovarianceMatrix,
    FrontierPoint,
    NoiseRiskReport,
    PortfolioWeights,
    bootstrap_spectra,
    covariance,
    frontier,
    min_variance_weights,
    noise_risk_ratio,
    split_experiment,
)
from .spectral import (
    CorrelationMatrix,
    DeviationReport,
    MPBounds,
    SpectralDecomposition,
    classify,
    correlation,
    eigendecompose,
    mp_bounds,
    mp_cdf,
    mp_density,
    spectrum_report,
)
from .synthetic import FactorSpec, factor_panel, iid_panel, planted_spec, taxonomy_spec

__all__ = [
    "adjusted_sigma2",
    "analyze_market",
    "BACKEND",
    "bootstrap_spectra",
    "classify",
    "clean",
    "CleanedMatrix",
    "ConvergenceError",
    "correlation",
    "CorrelationMatrix",
    "covariance",
    "CovarianceMatrix",
    "DeviationReport",
    "eigendecompose",
    "factor_panel",
    "FactorSpec",
    "frontier",
    "FrontierPoint",
    "iid_panel",
    "InfeasibleTargetError",
    "InputError",
    "ipr",
    "ipr_spectrum",
    "IPRSpectrum",
    "load_returns",
    "load_strategies",
    "market_series",
    "MarketRegression",
    "min_variance_weights",
    "mp_bounds",
    "mp_cdf",
    "mp_density",
    "MPBounds",
    "noise_risk_ratio",
    "NoiseRiskReport",
    "normalize",
    "NormalizedPanel",
    "NumericalError",
    "planted_spec",
    "PortfolioWeights",
    "remove_market",
    "ReturnsPanel",
    "RMTError",
    "SingularSystemError",
    "SpectralDecomposition",
    "spectrum_report",
    "split",
    "split_experiment",
    "strategy_contribution",
    "StrategyContribution",
    "StrategyMap",
    "taxonomy_spec",
    "write_returns",
]

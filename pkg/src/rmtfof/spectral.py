"""Correlation matrices, their spectra, and the Marchenko-Pastur noise band."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .panel import NormalizedPanel, ReturnsPanel, normalize


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order; column ``k`` of ``eigenvectors`` is u^k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


@dataclass(frozen=True)
class MPBounds:
    q: float
    sigma2: float
    lambda_minus: float
    lambda_plus: float


@dataclass(frozen=True)
class DeviationReport:
    """Zero-based eigenvalue ranks split by position relative to the band."""

    deviating_above: tuple[int, ...]
    deviating_below: tuple[int, ...]
    bulk: tuple[int, ...]
    fraction_deviating: float


def correlation(norm: NormalizedPanel) -> CorrelationMatrix:
    """Equal-time correlation C = G G^t / T of standardized returns."""
    g = norm.g
    c = g @ g.T / g.shape[1]
    c = 0.5 * (c + c.T)
    return CorrelationMatrix(tuple(norm.fund_ids), c)


def mp_bounds(q: float, sigma2: float = 1.0) -> MPBounds:
    """Edges of the random-matrix eigenvalue band for ratio ``q = T/N``."""
    if not q >= 1.0:
        raise InputError(f"Q = T/N must be >= 1, got {q}")
    if not sigma2 > 0.0:
        raise InputError(f"sigma2 must be positive, got {sigma2}")
    inv = 1.0 / q
    root = 2.0 * math.sqrt(inv)
    lo = sigma2 * (1.0 + inv - root)
    hi = sigma2 * (1.0 + inv + root)
    return MPBounds(q, sigma2, max(lo, 0.0), hi)


def mp_density(lam, bounds: MPBounds):
    """Marchenko-Pastur eigenvalue density; zero outside the band.

    Accepts scalars or arrays.
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    lo, hi = bounds.lambda_minus, bounds.lambda_plus
    inside = (lam_arr > lo) & (lam_arr < hi) & (lam_arr > 0)
    safe = np.where(inside, lam_arr, 1.0)
    prod = np.where(inside, (hi - safe) * (safe - lo), 0.0)
    dens = np.where(
        inside,
        bounds.q / (2.0 * math.pi * bounds.sigma2) * np.sqrt(np.maximum(prod, 0.0)) / safe,
        0.0,
    )
    if np.ndim(lam) == 0:
        return float(dens)
    return dens


def mp_cdf(lam, bounds: MPBounds):
    """Cumulative MP distribution.

    With lambda = c - h cos(theta) (c, h the band centre and half-width) the
    density becomes the smooth integrand q h^2 sin^2(theta) / (2 pi sigma2
    lambda), so a fixed Gauss-Legendre rule is accurate to rounding.
    """
    x = np.asarray(lam, dtype=np.float64)
    lo, hi = bounds.lambda_minus, bounds.lambda_plus
    c, h = 0.5 * (hi + lo), 0.5 * (hi - lo)
    theta_end = np.arccos(np.clip((c - x) / h, -1.0, 1.0))
    nodes, weights = _GAUSS_LEGENDRE
    theta = 0.5 * theta_end[..., None] * (nodes + 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        # 0/0 only at theta = 0 with lambda_minus = 0; those points are masked below
        f = np.sin(theta) ** 2 / (c - h * np.cos(theta))
    out = 0.5 * theta_end * (f @ weights) * bounds.q * h * h / (2 * np.pi * bounds.sigma2)
    out = np.clip(np.where(x >= hi, 1.0, np.where(x <= lo, 0.0, out)), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


_GAUSS_LEGENDRE = np.polynomial.legendre.leggauss(96)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    ``argmax`` returns the first maximum, so exact ties go to the lowest index.
    """
    out = np.array(vectors, dtype=np.float64, copy=True)
    idx = np.argmax(np.abs(out), axis=0)
    signs = np.sign(out[idx, np.arange(out.shape[1])])
    signs[signs == 0] = 1.0
    return out * signs


def eigendecompose(c: CorrelationMatrix | np.ndarray) -> SpectralDecomposition:
    values = c.values if isinstance(c, CorrelationMatrix) else np.asarray(c, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"expected a square matrix, got shape {values.shape}")
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(values - values.T)) > 1e-10 * scale:
        raise InputError("matrix is not symmetric")
    if not np.all(np.isfinite(values)):
        raise InputError("matrix has non-finite entries")
    try:
        lam, vec = np.linalg.eigh(values)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    order = np.argsort(lam, kind="stable")[::-1]
    return SpectralDecomposition(lam[order], fix_signs(vec[:, order]))


def classify(decomp: SpectralDecomposition, bounds: MPBounds) -> DeviationReport:
    """Strict-inequality split of eigenvalues into above-band, below-band and bulk."""
    lam = decomp.eigenvalues
    above = tuple(int(k) for k in np.flatnonzero(lam > bounds.lambda_plus))
    below = tuple(int(k) for k in np.flatnonzero(lam < bounds.lambda_minus))
    bulk = tuple(
        int(k)
        for k in np.flatnonzero((lam >= bounds.lambda_minus) & (lam <= bounds.lambda_plus))
    )
    frac = (len(above) + len(below)) / len(lam)
    return DeviationReport(above, below, bulk, frac)


@dataclass(frozen=True)
class SpectrumReport:
    correlation: CorrelationMatrix
    decomposition: SpectralDecomposition
    bounds: MPBounds
    deviations: DeviationReport
    period_labels: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        d = self.deviations
        return {
            "n_funds": self.correlation.n,
            "n_periods": len(self.period_labels),
            "q": self.bounds.q,
            "eigenvalues": self.decomposition.eigenvalues.tolist(),
            "lambda_minus": self.bounds.lambda_minus,
            "lambda_plus": self.bounds.lambda_plus,
            "deviating_above": list(d.deviating_above),
            "deviating_above_values": [float(self.decomposition.eigenvalues[k]) for k in d.deviating_above],
            "deviating_below": list(d.deviating_below),
            "fraction_deviating": d.fraction_deviating,
        }


def spectrum_report(panel: ReturnsPanel) -> SpectrumReport:
    """Normalize, correlate, decompose and classify against the sigma2 = 1 band."""
    c = correlation(normalize(panel))
    decomp = eigendecompose(c)
    bounds = mp_bounds(panel.q, 1.0)
    return SpectrumReport(c, decomp, bounds, classify(decomp, bounds), panel.period_labels)


def density_table(eigenvalues, bounds: MPBounds, bin_width: float | None = None):
    """Histogram-ready rows ``(lambda, empirical_density, mp_density)``.

    Without ``bin_width`` the Freedman-Diaconis rule picks the bins. The last
    bin is widened to include the largest eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    lo = min(float(lam.min()), bounds.lambda_minus)
    hi = max(float(lam.max()), bounds.lambda_plus)
    if bin_width is None:
        edges = np.histogram_bin_edges(lam, bins="fd", range=(lo, hi))
    else:
        if not bin_width > 0:
            raise InputError(f"bin width must be positive, got {bin_width}")
        nbins = max(1, int(math.ceil((hi - lo) / bin_width)))
        edges = lo + bin_width * np.arange(nbins + 1)
    counts, edges = np.histogram(lam, bins=edges)
    widths = np.diff(edges)
    empirical = counts / (lam.size * widths)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return [
        (float(c), float(e), float(mp_density(c, bounds)))
        for c, e in zip(centers, empirical)
    ]

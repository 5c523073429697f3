"""Eigenvalue flattening: keep the above-band modes, average everything else."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import CorrelationMatrix, MPBounds, SpectralDecomposition, eigendecompose


class NoBulkWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CleanedMatrix:
    labels: tuple[str, ...]
    values: np.ndarray
    kept_indices: tuple[int, ...]
    bulk_average: float | None
    pre_renormalization: np.ndarray
    renormalized: bool = True
    unchanged: bool = False

    def as_correlation(self) -> CorrelationMatrix:
        return CorrelationMatrix(self.labels, self.values)

    def to_json(self) -> dict:
        return {
            "kept_indices": list(self.kept_indices),
            "bulk_average": self.bulk_average,
            "renormalized": self.renormalized,
            "unchanged": self.unchanged,
        }


def flatten_spectrum(eigenvalues: np.ndarray, bounds: MPBounds):
    """Return (new eigenvalues, kept ranks, bulk average or None)."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    keep = lam > bounds.lambda_plus
    if keep.all():
        return lam.copy(), tuple(range(lam.size)), None
    avg = float(lam[~keep].mean())
    new = np.where(keep, lam, avg)
    return new, tuple(int(k) for k in np.flatnonzero(keep)), avg


def clean(
    c: CorrelationMatrix,
    bounds: MPBounds,
    renormalize: bool = True,
    decomp: SpectralDecomposition | None = None,
) -> CleanedMatrix:
    """Replace every eigenvalue at or below the upper band edge by their mean.

    The matrix is rebuilt from the original eigenvectors, which preserves the
    trace. With ``renormalize`` the result is rescaled to a unit diagonal.
    """
    if decomp is None:
        decomp = eigendecompose(c)
    new, kept, avg = flatten_spectrum(decomp.eigenvalues, bounds)
    if avg is None:
        warnings.warn("no eigenvalues inside the noise band; matrix left unchanged", NoBulkWarning)
        values = np.array(c.values, copy=True)
        return CleanedMatrix(c.labels, values, kept, None, values.copy(), renormalize, True)

    u = decomp.eigenvectors
    rebuilt = (u * new) @ u.T
    rebuilt = 0.5 * (rebuilt + rebuilt.T)
    values = rebuilt
    if renormalize:
        d = np.sqrt(np.diag(rebuilt))
        values = rebuilt / np.outer(d, d)
        values = 0.5 * (values + values.T)
        np.fill_diagonal(values, 1.0)
    return CleanedMatrix(c.labels, values, kept, avg, rebuilt, renormalize, False)

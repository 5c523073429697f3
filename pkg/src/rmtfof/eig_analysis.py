"""Eigenvector structure: strategy-group contributions and participation ratios."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .panel import StrategyMap
from .spectral import SpectralDecomposition


@dataclass(frozen=True)
class StrategyContribution:
    """Group-averaged squared components of eigenvector ``eigen_index``.

    ``contributions[l]`` is X = (1/n_l) * sum of u_i**2 over funds in group l;
    ``shares[l] = n_l * X`` sums to one over groups.
    """

    eigen_index: int
    contributions: dict[str, float]
    group_sizes: dict[str, int]

    @property
    def shares(self) -> dict[str, float]:
        return {g: self.group_sizes[g] * x for g, x in self.contributions.items()}

    def argmax(self) -> str:
        # ties resolved by sorted group name for reproducibility
        return max(sorted(self.contributions), key=lambda g: self.contributions[g])

    def rows(self):
        shares = self.shares
        return [
            (g, self.group_sizes[g], self.contributions[g], shares[g])
            for g in self.contributions
        ]


@dataclass(frozen=True)
class IPRSpectrum:
    values: np.ndarray
    eigenvalues: np.ndarray

    def rows(self):
        return [(k + 1, float(lam), float(v)) for k, (lam, v) in enumerate(zip(self.eigenvalues, self.values))]


def _check_unit(u: np.ndarray, tol: float = 1e-8) -> None:
    norm = float(np.sqrt(u @ u))
    if abs(norm - 1.0) > tol:
        raise InputError(f"eigenvector is not unit-norm (|u| = {norm!r})")


def strategy_contribution(u, smap: StrategyMap, k: int = 0) -> StrategyContribution:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (len(smap.fund_ids),):
        raise InputError(
            f"eigenvector has {u.size} components, strategy map covers {len(smap.fund_ids)} funds"
        )
    _check_unit(u)
    labels = smap.labels()
    groups = sorted(g for g, n in smap.group_sizes.items() if n > 0)
    sq = u * u
    totals = dict.fromkeys(groups, 0.0)
    for lab, s in zip(labels, sq):
        totals[lab] += s
    contributions = {g: totals[g] / smap.group_sizes[g] for g in groups}
    return StrategyContribution(k, contributions, {g: smap.group_sizes[g] for g in groups})


def ipr(u) -> float:
    """Inverse participation ratio: sum of fourth powers of a unit vector."""
    u = np.asarray(u, dtype=np.float64)
    _check_unit(u)
    return float(np.sum(u**4))


def ipr_spectrum(decomp: SpectralDecomposition) -> IPRSpectrum:
    vals = np.array([ipr(decomp.eigenvectors[:, k]) for k in range(decomp.eigenvectors.shape[1])])
    return IPRSpectrum(vals, decomp.eigenvalues.copy())

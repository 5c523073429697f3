"""Deterministic synthetic return panels.

Random numbers come from a counter-based generator so every panel is a pure
function of ``seed`` on every platform and backend:

* key      = mix64(seed + stream * 0xD1B54A32D192ED03)   (mod 2**64)
* word k   = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)     k = 0, 1, ...
* uniform  = (word >> 11) * 2**-53
* normals  = Box-Muller on consecutive uniform pairs (u1, u2):
  sqrt(-2 log(1 - u1)) * (cos, sin)(2 pi u2)

``mix64`` is the splitmix64 finalizer. Panel entries are filled row-major
(fund by fund). Streams: 0 for i.i.d. panels, 1 for group factors, 2 for
idiosyncratic noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InputError
from .panel import ReturnsPanel, StrategyMap

STREAM_IID = 0
STREAM_FACTORS = 1
STREAM_NOISE = 2

# fund counts per strategy in the reference 49-fund sample
HEDGE_FUND_TAXONOMY: tuple[tuple[str, int], ...] = (
    ("Asia excluding Japan Long/Short Equities", 2),
    ("Convertible & Equity Arbitrage", 2),
    ("Currency", 7),
    ("Emerging Markets", 6),
    ("European Long/Short Equity", 10),
    ("Fixed Income", 1),
    ("Global Equity", 5),
    ("Japan Market Neutral", 1),
    ("Macro", 3),
    ("Managed Futures", 11),
    ("Self-Invested Fund of Funds", 1),
)


@dataclass(frozen=True)
class FactorSpec:
    n_funds: int
    n_periods: int
    group_layout: tuple[tuple[str, int, float], ...]
    idio_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        layout = tuple((str(g), int(n), float(b)) for g, n, b in self.group_layout)
        object.__setattr__(self, "group_layout", layout)
        if sum(n for _, n, _ in layout) != self.n_funds:
            raise InputError("group sizes must sum to n_funds")
        if any(n < 1 for _, n, _ in layout):
            raise InputError("every group needs at least one fund")
        if len({g for g, _, _ in layout}) != len(layout):
            raise InputError("group names must be unique")
        if not all(np.isfinite(b) for _, _, b in layout):
            raise InputError("loadings must be finite")
        if not self.idio_scale > 0:
            raise InputError("idio_scale must be positive")
        if self.n_periods < 2 or self.n_funds < 2:
            raise InputError("need at least 2 funds and 2 periods")


def fund_ids(n: int) -> tuple[str, ...]:
    width = max(3, len(str(n)))
    return tuple(f"F{i + 1:0{width}d}" for i in range(n))


def period_labels(t: int, start_year: int = 1997) -> tuple[str, ...]:
    return tuple(f"{start_year + k // 12}-{k % 12 + 1:02d}" for k in range(t))


def normals(seed: int, stream: int, count: int) -> np.ndarray:
    return _backend.kernels.normals(int(seed), int(stream), int(count))


def iid_panel(n: int, t: int, seed: int = 0) -> ReturnsPanel:
    """Panel of independent standard normal returns."""
    if n < 2 or t < 2:
        raise InputError(f"need n >= 2 and t >= 2, got n={n}, t={t}")
    values = normals(seed, STREAM_IID, n * t).reshape(n, t)
    return ReturnsPanel(fund_ids(n), period_labels(t), values)


def factor_panel(spec: FactorSpec) -> tuple[ReturnsPanel, StrategyMap]:
    """Returns = group loading * group factor + idio_scale * noise."""
    L = len(spec.group_layout)
    N, T = spec.n_funds, spec.n_periods
    factors = normals(spec.seed, STREAM_FACTORS, L * T).reshape(L, T)
    noise = normals(spec.seed, STREAM_NOISE, N * T).reshape(N, T)
    group_of = np.repeat(np.arange(L), [n for _, n, _ in spec.group_layout])
    loadings = np.array([b for _, _, b in spec.group_layout])[group_of]
    values = loadings[:, None] * factors[group_of] + spec.idio_scale * noise
    ids = fund_ids(N)
    names = [spec.group_layout[g][0] for g in group_of]
    smap = StrategyMap.from_assignments(ids, dict(zip(ids, names)))
    return ReturnsPanel(ids, period_labels(T), values), smap


def planted_spec(seed: int = 0, loading: float = 0.4, idio_scale: float = 1.0,
                 n_periods: int = 105) -> FactorSpec:
    """49 funds: one loaded group of 20, four unloaded groups (8, 7, 7, 7)."""
    layout = (
        ("Loaded", 20, loading),
        ("Neutral A", 8, 0.0),
        ("Neutral B", 7, 0.0),
        ("Neutral C", 7, 0.0),
        ("Neutral D", 7, 0.0),
    )
    return FactorSpec(49, n_periods, layout, idio_scale, seed)


TAXONOMY_LOADINGS = {
    "Asia excluding Japan Long/Short Equities": 0.6,
    "Convertible & Equity Arbitrage": 0.4,
    "Currency": 0.8,
    "Emerging Markets": 0.9,
    "European Long/Short Equity": 0.7,
    "Fixed Income": 0.3,
    "Global Equity": 0.6,
    "Japan Market Neutral": 0.2,
    "Macro": 0.5,
    "Managed Futures": 1.0,
    "Self-Invested Fund of Funds": 0.4,
}


def taxonomy_spec(seed: int = 0, n_periods: int = 105, idio_scale: float = 1.0,
                  loadings: dict[str, float] | None = None) -> FactorSpec:
    """Eleven-strategy, 49-fund layout with one factor per strategy."""
    loadings = TAXONOMY_LOADINGS if loadings is None else loadings
    layout = tuple((name, n, loadings.get(name, 0.0)) for name, n in HEDGE_FUND_TAXONOMY)
    return FactorSpec(49, n_periods, layout, idio_scale, seed)

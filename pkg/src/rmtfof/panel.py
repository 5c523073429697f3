"""Return panels: CSV ingest, validation, standardization and splitting."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class ReturnsPanel:
    """N funds by T periods of raw periodic returns.

    Rows of ``returns`` follow ``fund_ids``; columns follow ``period_labels``.
    """

    fund_ids: tuple[str, ...]
    period_labels: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        fund_ids = tuple(str(f) for f in self.fund_ids)
        labels = tuple(str(p) for p in self.period_labels)
        values = np.array(self.returns, dtype=np.float64)
        if values.ndim != 2:
            raise InputError(f"returns must be 2-D, got shape {values.shape}")
        if values.shape != (len(fund_ids), len(labels)):
            raise InputError(
                f"returns shape {values.shape} does not match "
                f"{len(fund_ids)} funds x {len(labels)} periods"
            )
        if len(fund_ids) < 2:
            raise InputError(f"need at least 2 funds, got {len(fund_ids)}")
        if len(labels) < 2:
            raise InputError(f"need at least 2 periods, got {len(labels)}")
        dupes = [f for f, c in Counter(fund_ids).items() if c > 1]
        if dupes:
            raise InputError(f"duplicate fund id {dupes[0]!r}")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            i, t = bad[0]
            raise InputError(
                f"non-finite return for fund {fund_ids[i]!r} in period {labels[t]!r}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "fund_ids", fund_ids)
        object.__setattr__(self, "period_labels", labels)
        object.__setattr__(self, "returns", values)

    @property
    def n_funds(self) -> int:
        return len(self.fund_ids)

    @property
    def n_periods(self) -> int:
        return len(self.period_labels)

    @property
    def q(self) -> float:
        """Periods-to-funds ratio T/N."""
        return self.n_periods / self.n_funds


@dataclass(frozen=True)
class NormalizedPanel:
    fund_ids: tuple[str, ...]
    g: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray

    @property
    def n_periods(self) -> int:
        return self.g.shape[1]


@dataclass(frozen=True)
class StrategyMap:
    """Assignment of every fund of a panel to one strategy group.

    ``fund_ids`` keeps the panel's row order so eigenvector components can be
    matched to strategies by position.
    """

    fund_ids: tuple[str, ...]
    assignments: dict[str, str]
    group_sizes: dict[str, int]

    def labels(self) -> list[str]:
        return [self.assignments[f] for f in self.fund_ids]

    @classmethod
    def from_assignments(cls, fund_ids: Iterable[str], assignments: dict[str, str]):
        fund_ids = tuple(fund_ids)
        missing = [f for f in fund_ids if f not in assignments]
        if missing:
            raise InputError(f"fund {missing[0]!r} has no strategy")
        unknown = [f for f in assignments if f not in set(fund_ids)]
        if unknown:
            raise InputError(f"strategy row for unknown fund {unknown[0]!r}")
        sizes = Counter(assignments[f] for f in fund_ids)
        return cls(fund_ids, dict(assignments), dict(sorted(sizes.items())))


def _cell_float(text: str, period: str, fund: str, lineno: int) -> float:
    text = text.strip()
    if not text:
        raise InputError(f"line {lineno}: missing value for fund {fund!r} in period {period!r}")
    try:
        value = float(text)
    except ValueError:
        raise InputError(
            f"line {lineno}: non-numeric value {text!r} for fund {fund!r} in period {period!r}"
        ) from None
    if not math.isfinite(value):
        raise InputError(
            f"line {lineno}: non-finite value {text!r} for fund {fund!r} in period {period!r}"
        )
    return value


def load_returns(source: TextIO | str) -> ReturnsPanel:
    """Parse a ``period,<fund_1>,...,<fund_N>`` CSV into a panel.

    ``source`` is an open text stream or a path.
    """
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_returns(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty returns file") from None
    if not header or header[0].strip() != "period":
        raise InputError("returns header must start with 'period'")
    fund_ids = [h.strip() for h in header[1:]]
    seen = set()
    for col, fid in enumerate(fund_ids, start=2):
        if not fid:
            raise InputError(f"line 1, column {col}: empty fund id")
        if fid in seen:
            raise InputError(f"line 1, column {col}: duplicate fund id {fid!r}")
        seen.add(fid)
    if len(fund_ids) < 2:
        raise InputError(f"need at least 2 funds, got {len(fund_ids)}")

    labels: list[str] = []
    columns: list[list[float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        period = row[0].strip()
        if len(row) - 1 != len(fund_ids):
            raise InputError(
                f"line {lineno}: period {period!r} has {len(row) - 1} values, "
                f"expected {len(fund_ids)}"
            )
        columns.append(
            [_cell_float(cell, period, fid, lineno) for cell, fid in zip(row[1:], fund_ids)]
        )
        labels.append(period)
    if len(labels) < 2:
        raise InputError(f"need at least 2 periods, got {len(labels)}")
    return ReturnsPanel(tuple(fund_ids), tuple(labels), np.array(columns).T)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_returns(panel: ReturnsPanel, sink: TextIO | str) -> None:
    if isinstance(sink, str):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            return write_returns(panel, fh)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["period", *panel.fund_ids])
    for t, label in enumerate(panel.period_labels):
        writer.writerow([label, *(format_float(x) for x in panel.returns[:, t])])


def dumps_returns(panel: ReturnsPanel) -> str:
    buf = io.StringIO()
    write_returns(panel, buf)
    return buf.getvalue()


def normalize(panel: ReturnsPanel) -> NormalizedPanel:
    """Standardize each fund to zero mean and unit variance (1/T divisor)."""
    G = panel.returns
    means = G.mean(axis=1)
    centered = G - means[:, None]
    sigmas = np.sqrt(np.mean(centered**2, axis=1))
    scale = np.maximum(np.abs(means), np.max(np.abs(G), axis=1))
    for i, s in enumerate(sigmas):
        # relative test: a constant series leaves only rounding residue
        if not s > 1e-14 * max(scale[i], 1e-300):
            raise InputError(f"fund {panel.fund_ids[i]!r} has zero variance")
    g = centered / sigmas[:, None]
    return NormalizedPanel(panel.fund_ids, g, means, sigmas)


def split(panel: ReturnsPanel, first_len: int | None = None) -> tuple[ReturnsPanel, ReturnsPanel]:
    """Cut the panel in time; ``first_len`` defaults to ceil(T/2)."""
    T = panel.n_periods
    if first_len is None:
        first_len = (T + 1) // 2
    if not 2 <= first_len <= T - 2:
        raise InputError(f"split length {first_len} outside [2, {T - 2}] for T={T}")
    a = ReturnsPanel(panel.fund_ids, panel.period_labels[:first_len], panel.returns[:, :first_len])
    b = ReturnsPanel(panel.fund_ids, panel.period_labels[first_len:], panel.returns[:, first_len:])
    return a, b


def concat(first: ReturnsPanel, second: ReturnsPanel) -> ReturnsPanel:
    if first.fund_ids != second.fund_ids:
        raise InputError("panels cover different funds")
    return ReturnsPanel(
        first.fund_ids,
        first.period_labels + second.period_labels,
        np.hstack([first.returns, second.returns]),
    )


def load_strategies(source: TextIO | str, panel: ReturnsPanel) -> StrategyMap:
    """Read a ``fund_id,strategy`` CSV and check it covers ``panel`` exactly once."""
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_strategies(fh, panel)

    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty strategy file") from None
    if header[:2] != ["fund_id", "strategy"]:
        raise InputError("strategy header must be 'fund_id,strategy'")
    known = set(panel.fund_ids)
    assignments: dict[str, str] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2 or not row[1].strip():
            raise InputError(f"line {lineno}: missing strategy")
        fid, strategy = row[0].strip(), row[1].strip()
        if fid not in known:
            raise InputError(f"line {lineno}: strategy row for unknown fund {fid!r}")
        if fid in assignments:
            raise InputError(f"line {lineno}: duplicate assignment for fund {fid!r}")
        assignments[fid] = strategy
    return StrategyMap.from_assignments(panel.fund_ids, assignments)


def write_strategies(smap: StrategyMap, sink: TextIO | str) -> None:
    if isinstance(sink, str):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            return write_strategies(smap, fh)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["fund_id", "strategy"])
    for fid in smap.fund_ids:
        writer.writerow([fid, smap.assignments[fid]])

"""Long-only Markowitz optimization and the split-sample noise-risk experiment.

The minimum-variance problem for a target return is

    minimize    w' S w
    subject to  w' m = target,  sum(w) = 1,  w >= 0 (long-only)

Without the sign constraint the two equality multipliers give a single linear
system. With it, a primal active-set method walks from a two-asset vertex,
solving the equality-constrained subproblem on the free assets at each step
(see ``_pykernels.active_set_qp``; the compiled twin lives in ``_kernels``).
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .cleaning import clean
from .errors import (
    ConvergenceError,
    InfeasibleTargetError,
    InputError,
    NumericalError,
    SingularSystemError,
)
from .panel import ReturnsPanel, normalize, split
from .spectral import CorrelationMatrix, SpectrumReport, correlation, mp_bounds, spectrum_report

log = logging.getLogger(__name__)

KKT_TOL = 1e-10
RCOND = 1e-12
SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceMatrix:
    values: np.ndarray


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray

    def risk(self, sigma: CovarianceMatrix | np.ndarray) -> float:
        s = sigma.values if isinstance(sigma, CovarianceMatrix) else sigma
        w = self.weights
        return float(w @ s @ w)


@dataclass(frozen=True)
class FrontierPoint:
    target_return: float
    risk: float
    weights: PortfolioWeights


def covariance(c: CorrelationMatrix | np.ndarray, sigmas) -> CovarianceMatrix:
    """Sigma_ij = C_ij sigma_i sigma_j."""
    values = c.values if hasattr(c, "values") else np.asarray(c, dtype=np.float64)
    s = np.asarray(sigmas, dtype=np.float64)
    if values.ndim != 2 or values.shape != (s.size, s.size):
        raise InputError(f"correlation shape {values.shape} does not match {s.size} volatilities")
    if np.any(s <= 0):
        raise InputError("volatilities must be positive")
    return CovarianceMatrix(values * np.outer(s, s))


def _as_array(sigma) -> np.ndarray:
    return sigma.values if isinstance(sigma, CovarianceMatrix) else np.asarray(sigma, dtype=np.float64)


def _check_inputs(S: np.ndarray, m: np.ndarray) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"covariance must be square, got {S.shape}")
    if m.shape != (S.shape[0],):
        raise InputError(f"expected {S.shape[0]} expected returns, got {m.size}")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(m))):
        raise InputError("non-finite covariance or expected returns")


def _solve_unconstrained(S: np.ndarray, m: np.ndarray, target: float) -> np.ndarray:
    n = m.size
    kkt = np.zeros((n + 2, n + 2))
    kkt[:n, :n] = S
    kkt[:n, n] = kkt[n, :n] = m
    kkt[:n, n + 1] = kkt[n + 1, :n] = 1.0
    rhs = np.zeros(n + 2)
    rhs[n], rhs[n + 1] = target, 1.0
    cond = np.linalg.cond(kkt)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(f"two-multiplier system is singular (condition {cond:.3g})")
    return np.linalg.solve(kkt, rhs)[:n]


def _run_active_set(Sn: np.ndarray, a: np.ndarray, b: np.ndarray, w0, free) -> np.ndarray:
    n = Sn.shape[0]
    w, iters, status = _backend.kernels.active_set_qp(
        np.ascontiguousarray(Sn), np.ascontiguousarray(a), b, w0, free,
        20 * n + 100, KKT_TOL, RCOND,
    )
    if status == 1:
        raise ConvergenceError(f"active-set QP did not converge in {iters} iterations")
    if status != 0:
        raise NumericalError("least-squares solve failed inside the active-set QP")
    return np.maximum(w, 0.0)


def _nnls(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Lawson-Hanson non-negative least squares.

    scipy's nnls and BVLS both stop short of optimality on the degenerate
    duals produced below, so the textbook loop is kept here.
    """
    m, n = A.shape
    tol = 1e-11 * np.linalg.norm(A, 1) * max(1.0, float(np.linalg.norm(b)))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    skip = np.zeros(n, dtype=bool)
    grad = A.T @ b
    budget = 3 * n + 50
    while True:
        cand = ~passive & ~skip & (grad > tol)
        if not cand.any():
            break
        j = int(np.argmax(np.where(cand, grad, -np.inf)))
        # a column dependent on the passive set, or one that would enter at a
        # non-positive value, only adds rounding noise
        col = A[:, j]
        if passive.any():
            basis, _ = np.linalg.qr(A[:, passive])
            col = col - basis @ (basis.T @ col)
        trial = passive.copy()
        trial[j] = True
        zj = np.linalg.lstsq(A[:, trial], b, rcond=None)[0][np.flatnonzero(trial) == j]
        if np.linalg.norm(col) <= 1e-10 * np.linalg.norm(A[:, j]) or zj[0] <= 0:
            skip[j] = True
            continue
        passive[j] = True
        skip[:] = False
        while True:
            budget -= 1
            if budget < 0:
                raise ConvergenceError("non-negative least squares did not converge")
            z = np.zeros(n)
            z[passive] = np.linalg.lstsq(A[:, passive], b, rcond=None)[0]
            if np.all(z[passive] > 0):
                break
            neg = passive & (z <= 0)
            alpha = np.min(x[neg] / (x[neg] - z[neg]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
        x = z
        grad = A.T @ (b - A @ x)
    return x


def _min_norm_minimizer(Sn: np.ndarray, a: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Smallest-norm point among all minimizers when ``Sn`` is singular.

    The optimal set is {v >= 0 : a v = b, R' v = R' w} with R spanning the
    range of ``Sn``. Writing v = c + Z y (Z an orthonormal null-space basis,
    c orthogonal to it) turns min |v| into the least-distance program
    min |y| s.t. Z y >= -c, solved through its NNLS dual (Lawson-Hanson).
    """
    lam, vec = np.linalg.eigh(Sn)
    keep = lam > SINGULAR_TOL * max(lam[-1], 0.0)
    if keep.all():
        return w
    E = np.vstack([a, vec[:, keep].T])
    _, sv, vt = np.linalg.svd(E)
    rank = int(np.sum(sv > SINGULAR_TOL * sv[0]))
    Z = vt[rank:].T
    if Z.shape[1] == 0:
        return w
    c = w - Z @ (Z.T @ w)
    M = np.vstack([Z.T, -c])
    d = np.zeros(M.shape[0])
    d[-1] = 1.0
    r = M @ _nnls(M, d) - d
    if abs(r[-1]) < 1e-14:
        log.debug("least-distance dual reported infeasible; keeping the active-set point")
        return w
    v = np.maximum(c + Z @ (-r[:-1] / r[-1]), 0.0)
    # accept only if it is still a minimizer and feasible
    if (np.max(np.abs(a @ v - b)) > 1e-10
            or v @ Sn @ v > w @ Sn @ w + 1e-12 * max(1.0, w @ Sn @ w)):
        return w
    return v


def _budget_only(Sn: np.ndarray, support: np.ndarray, n: int, tie_break: bool) -> np.ndarray:
    # every asset in ``support`` has the same expected return
    sub = Sn[np.ix_(support, support)]
    k = support.size
    w0 = np.zeros(k)
    w0[0] = 1.0
    free = np.zeros(k, dtype=np.uint8)
    free[0] = 1
    a = np.ones((1, k))
    b = np.array([1.0])
    ws = _run_active_set(sub, a, b, w0, free)
    if tie_break:
        ws = _min_norm_minimizer(sub, a, b, ws)
    w = np.zeros(n)
    w[support] = ws
    return w


def is_singular(S: np.ndarray) -> bool:
    """True when ``S`` has a numerical null space (relative to its largest eigenvalue)."""
    lam = np.linalg.eigvalsh(S)
    return bool(lam[0] <= SINGULAR_TOL * max(lam[-1], 0.0))


def _solve_long_only(S: np.ndarray, m: np.ndarray, target: float, singular: bool | None = None) -> np.ndarray:
    n = m.size
    lo, hi = float(m.min()), float(m.max())
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if target < lo - slack or target > hi + slack:
        raise InfeasibleTargetError(
            f"target {target!r} outside the long-only range [{lo!r}, {hi!r}]"
        )
    # rescale the objective to unit size; the minimizer is unchanged
    scale = float(np.max(np.diag(S)))
    Sn = S / scale if scale > 0 else S
    if singular is None:
        singular = is_singular(Sn)
    spread = hi - lo
    if spread <= slack:
        return _budget_only(Sn, np.arange(n), n, singular)
    # at either end only the extreme assets are feasible; the general loop
    # would stall on zero-length steps there
    if target >= hi - slack:
        return _budget_only(Sn, np.flatnonzero(m >= hi - slack), n, singular)
    if target <= lo + slack:
        return _budget_only(Sn, np.flatnonzero(m <= lo + slack), n, singular)

    theta = (target - lo) / spread
    a = np.vstack([(m - lo) / spread, np.ones(n)])
    b = np.array([theta, 1.0])
    imin, imax = int(np.argmin(m)), int(np.argmax(m))
    w0 = np.zeros(n)
    w0[imax] = theta
    w0[imin] = 1.0 - theta
    free = np.zeros(n, dtype=np.uint8)
    free[imin] = free[imax] = 1
    w = _run_active_set(Sn, a, b, w0, free)
    return _min_norm_minimizer(Sn, a, b, w) if singular else w


def min_variance_weights(
    sigma: CovarianceMatrix | np.ndarray, m, target: float, long_only: bool = True
) -> PortfolioWeights:
    S = _as_array(sigma)
    m = np.asarray(m, dtype=np.float64)
    _check_inputs(S, m)
    if long_only:
        w = _solve_long_only(S, m, float(target))
    else:
        w = _solve_unconstrained(S, m, float(target))
    return PortfolioWeights(w)


def target_grid(m, grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise InputError(f"grid_size must be >= 2, got {grid_size}")
    m = np.asarray(m, dtype=np.float64)
    return np.linspace(m.min(), m.max(), grid_size)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def frontier(
    sigma: CovarianceMatrix | np.ndarray,
    m,
    grid_size: int = 50,
    long_only: bool = True,
    threads: int = 1,
    targets=None,
) -> list[FrontierPoint]:
    """Minimum-variance portfolios on an even grid of target returns.

    Infeasible targets are logged and left out.
    """
    S = _as_array(sigma)
    m = np.asarray(m, dtype=np.float64)
    _check_inputs(S, m)
    grid = target_grid(m, grid_size) if targets is None else np.asarray(targets, dtype=np.float64)
    singular = is_singular(S) if long_only else None

    def solve(t):
        try:
            if long_only:
                w = PortfolioWeights(_solve_long_only(S, m, float(t), singular))
            else:
                w = min_variance_weights(S, m, t, long_only=False)
        except InfeasibleTargetError as exc:
            log.warning("frontier point omitted: %s", exc)
            return None
        return FrontierPoint(float(t), w.risk(S), w)

    return [p for p in _map(solve, grid, threads) if p is not None]


def noise_risk_ratio(realized_risk: float, predicted_risk: float) -> float:
    """Relative excess of realized over predicted risk."""
    if not predicted_risk > 0:
        raise NumericalError(f"predicted risk must be positive, got {predicted_risk!r}")
    return (realized_risk - predicted_risk) / predicted_risk


@dataclass(frozen=True)
class HeldFrontier:
    """Frontier priced under the estimation matrix and re-priced out of sample."""

    points: list[FrontierPoint]
    realized_risk: np.ndarray
    rp: np.ndarray

    @property
    def predicted_risk(self) -> np.ndarray:
        return np.array([p.risk for p in self.points])

    @property
    def rp_mean(self) -> float:
        return float(np.mean(self.rp))


def _held_frontier(S_pred, S_real, m, targets, threads) -> HeldFrontier:
    pts = frontier(S_pred, m, targets=targets, threads=threads)
    realized = np.array([p.weights.risk(S_real) for p in pts])
    rp = np.array([noise_risk_ratio(r, p.risk) for r, p in zip(realized, pts)])
    return HeldFrontier(pts, realized, rp)


@dataclass(frozen=True)
class NoiseRiskReport:
    first_periods: int
    second_periods: int
    targets: np.ndarray
    raw: HeldFrontier
    cleaned: HeldFrontier | None
    realized_frontier: list[FrontierPoint]
    renormalized: bool = True
    cleaned_alt_rp_mean: float | None = None
    kept_indices: tuple[int, ...] = field(default=())

    @property
    def rp_raw_mean(self) -> float:
        return self.raw.rp_mean

    @property
    def rp_cleaned_mean(self) -> float | None:
        return None if self.cleaned is None else self.cleaned.rp_mean

    @property
    def improvement(self) -> float | None:
        """Relative reduction of the mean noise-risk measure by cleaning."""
        if self.cleaned is None:
            return None
        return (self.rp_raw_mean - self.rp_cleaned_mean) / self.rp_raw_mean

    def to_json(self) -> dict:
        raw = self.raw
        out = {
            "first_periods": self.first_periods,
            "second_periods": self.second_periods,
            "rp_raw_mean": raw.rp_mean,
            "rp_cleaned_mean": self.rp_cleaned_mean,
            "improvement_pct": None if self.improvement is None else 100.0 * self.improvement,
            # realized/predicted read as a ratio of variances and of volatilities
            "risk_ratio_raw_mean": float(np.mean(raw.realized_risk / raw.predicted_risk)),
            "vol_ratio_raw_mean": float(np.mean(np.sqrt(raw.realized_risk / raw.predicted_risk))),
            "renormalized": self.renormalized,
            "kept_indices": list(self.kept_indices),
        }
        if self.cleaned is not None:
            cl = self.cleaned
            rr_raw = out["risk_ratio_raw_mean"]
            rr_cl = float(np.mean(cl.realized_risk / cl.predicted_risk))
            out["risk_ratio_cleaned_mean"] = rr_cl
            out["risk_ratio_improvement_pct"] = 100.0 * (rr_raw - rr_cl) / rr_raw
            out["vol_ratio_cleaned_mean"] = float(
                np.mean(np.sqrt(cl.realized_risk / cl.predicted_risk))
            )
            out["rp_cleaned_alt_mean"] = self.cleaned_alt_rp_mean
        points = []
        realized_by_t = {p.target_return: p.risk for p in self.realized_frontier}
        for k, p in enumerate(raw.points):
            row = {
                "target_return": p.target_return,
                "predicted_risk_raw": p.risk,
                "realized_risk_raw": float(raw.realized_risk[k]),
                "rp_raw": float(raw.rp[k]),
            }
            if self.cleaned is not None:
                q = self.cleaned.points[k]
                row["predicted_risk_cleaned"] = q.risk
                row["realized_risk_cleaned"] = float(self.cleaned.realized_risk[k])
                row["rp_cleaned"] = float(self.cleaned.rp[k])
            row["realized_frontier_risk"] = realized_by_t.get(p.target_return)
            points.append(row)
        out["points"] = points
        return out


def split_experiment(
    panel: ReturnsPanel,
    use_cleaning: bool = True,
    grid_size: int = 50,
    renormalize: bool = True,
    first_len: int | None = None,
    threads: int = 1,
    with_alternate: bool = True,
) -> NoiseRiskReport:
    """Predicted-versus-realized frontier comparison on two halves of a panel.

    Expected returns are the second-half means. Predicted frontiers use the
    first-half correlation (raw and optionally cleaned) with first-half
    volatilities; each predicted portfolio is then priced under the
    second-half covariance. ``with_alternate`` also runs the cleaning variant
    with the opposite diagonal-renormalization setting.
    """
    if panel.n_periods < 4:
        raise InputError(f"need T >= 4 for a split experiment, got {panel.n_periods}")
    first, second = split(panel, first_len)
    m = second.returns.mean(axis=1)
    n1, n2 = normalize(first), normalize(second)
    c1 = correlation(n1)
    s1_raw = covariance(c1, n1.sigmas)
    s2 = covariance(correlation(n2), n2.sigmas)
    targets = target_grid(m, grid_size)

    raw = _held_frontier(s1_raw, s2, m, targets, threads)
    cleaned = None
    alt_mean = None
    kept: tuple[int, ...] = ()
    if use_cleaning:
        bounds = mp_bounds(first.q, 1.0)
        cm = clean(c1, bounds, renormalize=renormalize)
        kept = cm.kept_indices
        cleaned = _held_frontier(covariance(cm.values, n1.sigmas), s2, m, targets, threads)
        if with_alternate:
            alt = clean(c1, bounds, renormalize=not renormalize)
            alt_mean = _held_frontier(
                covariance(alt.values, n1.sigmas), s2, m, targets, threads
            ).rp_mean
    realized = frontier(s2, m, targets=targets, threads=threads)
    return NoiseRiskReport(
        first.n_periods,
        second.n_periods,
        targets,
        raw,
        cleaned,
        realized,
        renormalize,
        alt_mean,
        kept,
    )


def bootstrap_spectra(panel: ReturnsPanel, first_len: int | None = None) -> tuple[SpectrumReport, SpectrumReport]:
    """Spectrum and band classification for each half of the panel."""
    if panel.n_periods < 4:
        raise InputError(f"need T >= 4 to split, got {panel.n_periods}")
    first, second = split(panel, first_len)
    return spectrum_report(first), spectrum_report(second)

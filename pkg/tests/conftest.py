import io

import numpy as np
import pytest

from rmtfof import _backend
from rmtfof.panel import ReturnsPanel

ACCEPTANCE_RESULTS = []


def panel_from(rows, labels=None, ids=None):
    rows = np.asarray(rows, dtype=float)
    n, t = rows.shape
    ids = ids or [f"f{i}" for i in range(n)]
    labels = labels or [f"p{k}" for k in range(t)]
    return ReturnsPanel(tuple(ids), tuple(labels), rows)


def csv_stream(text):
    return io.StringIO(text)


def grid_oracle(S, m, target, step=0.001):
    """Brute force over the segment {w >= 0, sum w = 1, m'w = target} for N = 3.

    The segment is a line in the simplex; sample it at ``step`` spacing in
    weight space and always include both exact endpoints.
    """
    d = np.cross(np.ones(3), m)
    d /= np.linalg.norm(d)
    A = np.vstack([np.ones(3), m])
    w0 = np.linalg.lstsq(A, np.array([1.0, target]), rcond=None)[0]
    lo, hi = -np.inf, np.inf
    for i in range(3):
        if abs(d[i]) < 1e-15:
            if w0[i] < -1e-12:
                return None
            continue
        s = -w0[i] / d[i]
        if d[i] > 0:
            lo = max(lo, s)
        else:
            hi = min(hi, s)
    if lo > hi + 1e-12:
        return None
    n = int(np.ceil((hi - lo) / step)) + 1
    s = np.linspace(lo, hi, max(n, 2))
    W = w0[None, :] + s[:, None] * d[None, :]
    return float(np.min(np.einsum("ki,ij,kj->k", W, S, W)))


@pytest.fixture(params=sorted(_backend.available_backends()))
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.available_backends()[request.param])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)

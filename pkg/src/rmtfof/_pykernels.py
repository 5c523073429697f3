"""Pure-Python/NumPy versions of the hot kernels.

Same algorithms and same arithmetic order as ``_kernels.pyx``; used whenever
the compiled extension is unavailable or ``RMTFOF_BACKEND=python`` is set.
"""
import math

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
STREAM_MULT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 1.0 / 9007199254740992.0
_TWO_PI = 6.283185307179586


def _mix64(z):
    # splitmix64 finalizer, z is a uint64 array (wraps mod 2**64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed, stream):
    base = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    mult = np.array([stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) * STREAM_MULT
    base = base + mult
    return int(_mix64(base)[0])


def raw_stream(seed, stream, count):
    """``count`` 64-bit words: mix64(key + (k+1) * golden) for k = 0..count-1."""
    key = np.uint64(stream_key(seed, stream))
    k = np.arange(1, count + 1, dtype=np.uint64)
    return _mix64(key + k * GOLDEN)


def normals(seed, stream, count):
    """Standard normal variates by Box-Muller over consecutive word pairs."""
    if count <= 0:
        return np.empty(0)
    npairs = (count + 1) // 2
    raw = raw_stream(seed, stream, 2 * npairs)
    u = (raw >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
    u1 = 1.0 - u[0::2]
    u2 = u[1::2]
    # libm through ``math`` so results match the compiled kernel bit for bit
    logs = np.fromiter(map(math.log, u1.tolist()), dtype=np.float64, count=npairs)
    r = np.sqrt(-2.0 * logs)
    theta = (_TWO_PI * u2).tolist()
    out = np.empty(2 * npairs)
    out[0::2] = r * np.fromiter(map(math.cos, theta), dtype=np.float64, count=npairs)
    out[1::2] = r * np.fromiter(map(math.sin, theta), dtype=np.float64, count=npairs)
    return out[:count]


def _solve_min_norm(kkt, rhs, rcond):
    sol, _, _, _ = np.linalg.lstsq(kkt, rhs, rcond=rcond)
    return sol


def active_set_qp(sigma, a, b, w0, free0, max_iter, tol, rcond):
    """Primal active-set method for min 1/2 w'Sw s.t. a w = b, w >= 0.

    ``w0`` must be feasible and ``free0`` marks the initial free set; every
    index outside it must have ``w0 == 0``. Returns ``(w, iterations, status)``
    with status 0 on convergence and 1 when ``max_iter`` is exhausted.
    """
    neq = a.shape[0]
    w = np.array(w0, dtype=np.float64)
    free = np.array(free0, dtype=bool)
    step_tol = 1e-13

    for it in range(1, max_iter + 1):
        fidx = np.flatnonzero(free)
        nf = fidx.size
        kkt = np.zeros((nf + neq, nf + neq))
        kkt[:nf, :nf] = sigma[np.ix_(fidx, fidx)]
        kkt[:nf, nf:] = a[:, fidx].T
        kkt[nf:, :nf] = a[:, fidx]
        rhs = np.zeros(nf + neq)
        rhs[nf:] = b
        sol = _solve_min_norm(kkt, rhs, rcond)
        x = sol[:nf]
        lam = sol[nf:]
        p = x - w[fidx]

        if np.max(np.abs(p)) <= step_tol:
            w[fidx] = x
            widx = np.flatnonzero(~free)
            if widx.size == 0:
                return w, it, 0
            mu = sigma[widx] @ w + a[:, widx].T @ lam
            j = int(np.argmin(mu))
            if mu[j] >= -tol:
                return w, it, 0
            free[widx[j]] = True
            continue

        alpha = 1.0
        block = -1
        for pos in range(nf):
            if p[pos] < -step_tol:
                ratio = -w[fidx[pos]] / p[pos]
                if ratio < alpha:
                    alpha = ratio
                    block = fidx[pos]
        w[fidx] += alpha * p
        if block >= 0:
            w[block] = 0.0
            free[block] = False

    return w, max_iter, 1

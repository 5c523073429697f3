# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the counter-based normal generator and the long-only
active-set QP loop. Mirrors ``_pykernels`` step for step."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, sin, fabs
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dgelsd

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MULT = 0xD1B54A32D192ED03ULL
cdef double TWO_NEG53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def stream_key(seed, stream):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t k = <uint64_t>(stream & 0xFFFFFFFFFFFFFFFF)
    return int(mix64(s + k * STREAM_MULT))


def raw_stream(seed, stream, Py_ssize_t count):
    cdef uint64_t key = <uint64_t>stream_key(seed, stream)
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            o[i] = mix64(key + <uint64_t>(i + 1) * GOLDEN)
    return out


def normals(seed, stream, Py_ssize_t count):
    if count <= 0:
        return np.empty(0)
    cdef uint64_t key = <uint64_t>stream_key(seed, stream)
    cdef Py_ssize_t npairs = (count + 1) // 2
    out = np.empty(2 * npairs)
    cdef double[::1] o = out
    cdef Py_ssize_t j
    cdef double u1, u2, r, theta
    with nogil:
        for j in range(npairs):
            u1 = 1.0 - <double>(mix64(key + <uint64_t>(2 * j + 1) * GOLDEN) >> 11) * TWO_NEG53
            u2 = <double>(mix64(key + <uint64_t>(2 * j + 2) * GOLDEN) >> 11) * TWO_NEG53
            r = sqrt(-2.0 * log(u1))
            theta = TWO_PI * u2
            o[2 * j] = r * cos(theta)
            o[2 * j + 1] = r * sin(theta)
    return out[:count]


cdef int _lstsq(double* kkt, double* rhs, int m, double rcond,
                double* sv, double* work, int lwork, int* iwork) noexcept nogil:
    # kkt is symmetric, so row-major storage is also valid column-major input
    cdef int nrhs = 1, rank = 0, info = 0
    dgelsd(&m, &m, &nrhs, kkt, &m, rhs, &m, sv, &rcond, &rank,
           work, &lwork, iwork, &info)
    return info


def active_set_qp(double[:, ::1] sigma, double[:, ::1] a, double[::1] b,
                  w0, free0, int max_iter, double tol, double rcond):
    """Primal active-set loop; see ``_pykernels.active_set_qp``."""
    cdef int n = sigma.shape[0]
    cdef int neq = a.shape[0]
    cdef int mmax = n + neq
    w_arr = np.array(w0, dtype=np.float64)
    free_arr = np.array(free0, dtype=np.uint8)
    cdef double[::1] w = w_arr
    cdef unsigned char[::1] isfree = free_arr
    cdef double step_tol = 1e-13

    # dgelsd workspace sized for the largest system once
    cdef int smlsiz = 25
    cdef int nlvl = 1
    while (mmax // (smlsiz + 1)) >> nlvl:
        nlvl += 1
    cdef int liwork = 3 * mmax * nlvl + 11 * mmax
    cdef int lwork = -1, info = 0, nrhs = 1, rank = 0
    cdef double wq = 0.0
    cdef double dummy_rc = rcond
    kkt_arr = np.zeros(mmax * mmax)
    rhs_arr = np.zeros(mmax)
    sv_arr = np.zeros(mmax)
    iwork_arr = np.zeros(max(liwork, 1), dtype=np.intc)
    cdef double[::1] kkt = kkt_arr
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] sv = sv_arr
    cdef int[::1] iwork = iwork_arr
    dgelsd(&mmax, &mmax, &nrhs, &kkt[0], &mmax, &rhs[0], &mmax, &sv[0],
           &dummy_rc, &rank, &wq, &lwork, &iwork[0], &info)
    lwork = <int>wq + 1
    work_arr = np.zeros(lwork)
    cdef double[::1] work = work_arr

    fidx_arr = np.zeros(n, dtype=np.intc)
    widx_arr = np.zeros(n, dtype=np.intc)
    p_arr = np.zeros(n)
    cdef int[::1] fidx = fidx_arr
    cdef int[::1] widx = widx_arr
    cdef double[::1] p = p_arr

    cdef int it, nf, nw, m, r, c, i, j, pos, block, jmin
    cdef int status = 1, iters = max_iter
    cdef double pmax, alpha, ratio, mu, mumin, s

    with nogil:
        for it in range(1, max_iter + 1):
            nf = 0
            nw = 0
            for i in range(n):
                if isfree[i]:
                    fidx[nf] = i
                    nf += 1
                else:
                    widx[nw] = i
                    nw += 1
            m = nf + neq
            for r in range(m * m):
                kkt[r] = 0.0
            for r in range(nf):
                for c in range(nf):
                    kkt[r * m + c] = sigma[fidx[r], fidx[c]]
                for c in range(neq):
                    kkt[r * m + nf + c] = a[c, fidx[r]]
                    kkt[(nf + c) * m + r] = a[c, fidx[r]]
            for r in range(nf):
                rhs[r] = 0.0
            for c in range(neq):
                rhs[nf + c] = b[c]
            info = _lstsq(&kkt[0], &rhs[0], m, rcond, &sv[0], &work[0], lwork, &iwork[0])
            if info != 0:
                status = 2
                iters = it
                break

            pmax = 0.0
            for pos in range(nf):
                p[pos] = rhs[pos] - w[fidx[pos]]
                if fabs(p[pos]) > pmax:
                    pmax = fabs(p[pos])

            if pmax <= step_tol:
                for pos in range(nf):
                    w[fidx[pos]] = rhs[pos]
                if nw == 0:
                    status = 0
                    iters = it
                    break
                jmin = 0
                mumin = 0.0
                for j in range(nw):
                    s = 0.0
                    for c in range(n):
                        s = s + sigma[widx[j], c] * w[c]
                    mu = s
                    s = 0.0
                    for c in range(neq):
                        s = s + a[c, widx[j]] * rhs[nf + c]
                    mu = mu + s
                    if j == 0 or mu < mumin:
                        mumin = mu
                        jmin = j
                if mumin >= -tol:
                    status = 0
                    iters = it
                    break
                isfree[widx[jmin]] = 1
                continue

            alpha = 1.0
            block = -1
            for pos in range(nf):
                if p[pos] < -step_tol:
                    ratio = -w[fidx[pos]] / p[pos]
                    if ratio < alpha:
                        alpha = ratio
                        block = fidx[pos]
            for pos in range(nf):
                w[fidx[pos]] = w[fidx[pos]] + alpha * p[pos]
            if block >= 0:
                w[block] = 0.0
                isfree[block] = 0

    return w_arr, iters, status

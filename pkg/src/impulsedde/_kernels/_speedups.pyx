# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ETD scans; argument conventions match reference.py exactly.

The step rule, jump handling, and window dots are line-for-line the
reference algorithm. Python is re-entered only for the impulse callback
at scheduled jump nodes; everything else is typed C loops, which is what
makes long horizons and many Picard sweeps cheap. The delay window dot
accumulates sequentially while the reference goes through BLAS, so the
two backends can differ by reassociation rounding (a few ULPs); the
jump-free steps are elementwise and agree bitwise.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def linear_scan(E, w1, w2, fL, fR, jump_idx, jump_vals, x0, use_etd2):
    """Sequential ETD scan of u' + A u = f(t) with additive jumps.

    See reference.linear_scan; returns u of shape (N+1, n) with u[0] = x0.
    """
    fL = np.ascontiguousarray(fL, dtype=np.float64)
    fR = np.ascontiguousarray(fR, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] u = np.empty(
        (fL.shape[0] + 1, fL.shape[1]))
    u[0] = np.asarray(x0, dtype=np.float64)
    _linear_scan(
        np.ascontiguousarray(E, dtype=np.float64),
        np.ascontiguousarray(w1, dtype=np.float64),
        np.ascontiguousarray(w2, dtype=np.float64),
        fL, fR,
        np.ascontiguousarray(jump_idx, dtype=np.int64),
        np.ascontiguousarray(np.atleast_2d(jump_vals), dtype=np.float64)
        if len(jump_idx) else np.zeros((0, fL.shape[1])),
        u, 1 if use_etd2 else 0)
    return u


cdef void _linear_scan(double[::1] E, double[::1] w1, double[::1] w2,
                       double[:, ::1] fL, double[:, ::1] fR,
                       cnp.int64_t[::1] jump_idx, double[:, ::1] jump_vals,
                       double[:, ::1] u, int use_etd2):
    cdef Py_ssize_t N = fL.shape[0]
    cdef Py_ssize_t n = fL.shape[1]
    cdef Py_ssize_t nj = jump_idx.shape[0]
    cdef Py_ssize_t k, j, jp = 0
    cdef double uRkj
    for k in range(N):
        if jp < nj and jump_idx[jp] == k:
            for j in range(n):
                uRkj = u[k, j] + jump_vals[jp, j]
                if use_etd2:
                    u[k + 1, j] = (E[j] * uRkj + w1[j] * fL[k, j]
                                   + w2[j] * (fR[k, j] - fL[k, j]))
                else:
                    u[k + 1, j] = E[j] * uRkj + w1[j] * fL[k, j]
            jp += 1
        else:
            for j in range(n):
                uRkj = u[k, j]
                if use_etd2:
                    u[k + 1, j] = (E[j] * uRkj + w1[j] * fL[k, j]
                                   + w2[j] * (fR[k, j] - fL[k, j]))
                else:
                    u[k + 1, j] = E[j] * uRkj + w1[j] * fL[k, j]
    return


def affine_ivp_scan(E, w1, w2, tw, gain, g, u, uR, jump_idx, jump_map_idx,
                    impulse_cb, m, k_start, use_etd2, has_delay):
    """Sequential ETD scan of the affine delay problem, in place.

    See reference.affine_ivp_scan. u and uR must be C-contiguous float64;
    the scan writes nodes k_start+1 .. T into them.
    """
    if not (isinstance(u, np.ndarray) and u.dtype == np.float64
            and u.flags.c_contiguous):
        raise TypeError("u must be a C-contiguous float64 array")
    if not (isinstance(uR, np.ndarray) and uR.dtype == np.float64
            and uR.flags.c_contiguous):
        raise TypeError("uR must be a C-contiguous float64 array")
    cdef double[:, ::1] u_v = u
    cdef double[:, ::1] uR_v = uR
    cdef double[::1] E_v = np.ascontiguousarray(E, dtype=np.float64)
    cdef double[::1] w1_v = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] w2_v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef double[::1] tw_v = (np.ascontiguousarray(tw, dtype=np.float64)
                             if has_delay else np.zeros(1))
    cdef double[::1] gain_v = np.ascontiguousarray(gain, dtype=np.float64)
    cdef double[:, ::1] g_v = np.ascontiguousarray(g, dtype=np.float64)
    cdef cnp.int64_t[::1] jidx = np.ascontiguousarray(jump_idx,
                                                      dtype=np.int64)
    cdef cnp.int64_t[::1] jmap = np.ascontiguousarray(jump_map_idx,
                                                      dtype=np.int64)
    cdef Py_ssize_t T = u.shape[0] - 1
    cdef Py_ssize_t n = u.shape[1]
    cdef Py_ssize_t mm = m
    cdef Py_ssize_t ks = k_start
    cdef Py_ssize_t nj = jidx.shape[0]
    cdef int etd2 = 1 if use_etd2 else 0
    cdef int delay = 1 if has_delay else 0
    cdef Py_ssize_t k, j, i, b, jp = 0
    cdef double acc, fLj, fRj, uhatj
    cdef double[::1] fL_buf = np.empty(n)
    cdef double[::1] uhat_buf = np.empty(n)
    cdef object jump

    for k in range(ks, T):
        if jp < nj and jidx[jp] == k:
            # the one Python re-entry: evaluate the impulse map
            jump = impulse_cb(jmap[jp], np.asarray(u[k]))
            for j in range(n):
                uR_v[k, j] = u_v[k, j] + (<double> jump[j])
            jp += 1
        else:
            for j in range(n):
                uR_v[k, j] = u_v[k, j]
        if delay:
            b = k - mm
            for j in range(n):
                acc = tw_v[0] * uR_v[b, j]
                for i in range(1, mm):
                    acc += tw_v[i] * (u_v[b + i, j] + uR_v[b + i, j])
                fLj = (gain_v[k] * uR_v[k, j] + acc
                       + tw_v[mm] * uR_v[k, j] + g_v[k, j])
                fL_buf[j] = fLj
                uhat_buf[j] = E_v[j] * uR_v[k, j] + w1_v[j] * fLj
            if etd2:
                b = k + 1 - mm
                for j in range(n):
                    acc = tw_v[0] * uR_v[b, j]
                    for i in range(1, mm):
                        acc += tw_v[i] * (u_v[b + i, j] + uR_v[b + i, j])
                    fRj = (gain_v[k + 1] * uhat_buf[j] + acc
                           + tw_v[mm] * uhat_buf[j] + g_v[k + 1, j])
                    u_v[k + 1, j] = uhat_buf[j] + w2_v[j] * (fRj - fL_buf[j])
            else:
                for j in range(n):
                    u_v[k + 1, j] = uhat_buf[j]
        else:
            for j in range(n):
                fLj = gain_v[k] * uR_v[k, j] + g_v[k, j]
                uhatj = E_v[j] * uR_v[k, j] + w1_v[j] * fLj
                if etd2:
                    fRj = gain_v[k + 1] * uhatj + g_v[k + 1, j]
                    u_v[k + 1, j] = uhatj + w2_v[j] * (fRj - fLj)
                else:
                    u_v[k + 1, j] = uhatj

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Signatures match ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, log, exp, fabs

cnp.import_array()

cdef double _TINY = 1e-300


cdef Py_ssize_t _count(const double[::1] diag, const double[::1] off2, double x) noexcept nogil:
    cdef Py_ssize_t i, m = diag.shape[0], count = 0
    cdef double q = diag[0] - x
    if q == 0.0:
        q = -_TINY
    if q < 0.0:
        count += 1
    for i in range(1, m):
        q = diag[i] - x - off2[i - 1] / q
        if q == 0.0:
            q = -_TINY
        if q < 0.0:
            count += 1
    return count


def sturm_count(diag, off2, double x):
    cdef const double[::1] d = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(off2, dtype=np.float64)
    return int(_count(d, e, x))


def tridiag_eig_bisect(diag, off2, Py_ssize_t k, double lo, double hi, double tol):
    cdef const double[::1] d = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(off2, dtype=np.float64)
    cdef double mid
    with nogil:
        while hi - lo > tol * max(1.0, fabs(lo) + fabs(hi)):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _count(d, e, mid) > k:
                hi = mid
            else:
                lo = mid
    return 0.5 * (lo + hi)


def wos_advance(double[:, ::1] z, const double[:, ::1] g):
    cdef Py_ssize_t i, j, m = z.shape[0], dim = z.shape[1]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] dist = out
    cdef double zz, gg, scale
    with nogil:
        for i in range(m):
            zz = z[i, 0] * z[i, 0]
            gg = g[i, 0] * g[i, 0]
            for j in range(1, dim):
                zz = zz + z[i, j] * z[i, j]
                gg = gg + g[i, j] * g[i, j]
            scale = (1.0 - sqrt(zz)) / sqrt(gg)
            for j in range(dim):
                z[i, j] = z[i, j] + scale * g[i, j]
            zz = z[i, 0] * z[i, 0]
            for j in range(1, dim):
                zz = zz + z[i, j] * z[i, j]
            dist[i] = 1.0 - sqrt(zz)
    return out


cdef inline double _weight(double t, double n, double alpha, double s, double log_scale) noexcept nogil:
    cdef double sh = sin(0.5 * t)
    cdef double q = (1.0 - s) * (1.0 - s) + 4.0 * s * sh * sh
    cdef double sn = sin(t)
    if sn <= 0.0:
        return 0.0
    return exp((n - 1.0) * log(sn) - 0.5 * (n + alpha) * log(q) - log_scale)


cdef inline double _partial(double lo, double t, const double[::1] nodes, const double[::1] weights,
                            double n, double alpha, double s, double log_scale) noexcept nogil:
    cdef double half = 0.5 * (t - lo), mid = 0.5 * (t + lo), acc = 0.0
    cdef Py_ssize_t k
    for k in range(nodes.shape[0]):
        acc = acc + _weight(mid + half * nodes[k], n, alpha, s, log_scale) * weights[k]
    return half * acc


def scaled_weight(theta, double n, double alpha, double s, double log_scale):
    arr = np.asarray(theta, dtype=np.float64)
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = np.empty_like(flat)
    cdef const double[::1] t = flat
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(t.shape[0]):
            o[i] = _weight(t[i], n, alpha, s, log_scale)
    return out.reshape(arr.shape)


def partial_panel_integral(lo, theta, nodes, weights, double n, double alpha, double s, double log_scale):
    lo_b, th_b = np.broadcast_arrays(np.asarray(lo, dtype=np.float64), np.asarray(theta, dtype=np.float64))
    shape = th_b.shape
    cdef const double[::1] a = np.ascontiguousarray(lo_b).reshape(-1)
    cdef const double[::1] t = np.ascontiguousarray(th_b).reshape(-1)
    cdef const double[::1] xn = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] wn = np.ascontiguousarray(weights, dtype=np.float64)
    out = np.empty(t.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(t.shape[0]):
            o[i] = _partial(a[i], t[i], xn, wn, n, alpha, s, log_scale)
    return out.reshape(shape)


def quantile_bisect(targets, lo, hi, nodes, weights, double n, double alpha, double s,
                    double log_scale, int max_iter):
    cdef const double[::1] tg = np.ascontiguousarray(targets, dtype=np.float64)
    cdef const double[::1] l0 = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] h0 = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] xn = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] wn = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t i, m = tg.shape[0]
    cdef int it
    theta_out = np.empty(m, dtype=np.float64)
    resid_out = np.empty(m, dtype=np.float64)
    a_out = np.empty(m, dtype=np.float64)
    b_out = np.empty(m, dtype=np.float64)
    cdef double[::1] th = theta_out
    cdef double[::1] rs = resid_out
    cdef double[::1] ao = a_out
    cdef double[::1] bo = b_out
    cdef double a, b, x, nxt, val, w
    with nogil:
        for i in range(m):
            # safeguarded Newton; out-of-bracket steps fall back to bisection
            a = l0[i]
            b = h0[i]
            x = 0.5 * (a + b)
            for it in range(max_iter):
                val = _partial(l0[i], x, xn, wn, n, alpha, s, log_scale) - tg[i]
                if val < 0.0:
                    a = x
                elif val > 0.0:
                    b = x
                else:
                    break
                w = _weight(x, n, alpha, s, log_scale)
                if w > 0.0 and fabs(val / w) <= 1e-13 * (h0[i] - l0[i]) + 4e-16 * fabs(x):
                    # converged; a correction this small may round back onto a bracket end
                    nxt = x - val / w
                    if nxt > a and nxt < b:
                        x = nxt
                    break
                nxt = x - val / w if w > 0.0 else a
                if not (nxt > a and nxt < b):
                    nxt = 0.5 * (a + b)
                if nxt <= a or nxt >= b:
                    break
                x = nxt
            th[i] = x
            rs[i] = fabs(_partial(l0[i], x, xn, wn, n, alpha, s, log_scale) - tg[i])
            ao[i] = a
            bo[i] = b
    return theta_out, resid_out, a_out, b_out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 kernels. Arithmetic order mirrors ``_kernels_py`` exactly."""
import numpy as np
from libc.math cimport isfinite

cdef double CLAMP_TOL = 1e-12
cdef int OK = 0
cdef int NEGATIVE = 1
cdef int NONFINITE = 2


cdef inline void _rhs(const double* y, double lam, double alpha, double eps,
                      double delta, double mu, double nu, double phi,
                      double* out) noexcept nogil:
    cdef double S = y[0], Q = y[1], C = y[2], I = y[3], R = y[4]
    cdef double sq = S * Q
    cdef double sc = S * C
    cdef double qc = Q * C
    cdef double ci = C * I
    out[0] = lam - alpha * sq - eps * sc - phi * S
    out[1] = alpha * sq - eps * qc - phi * Q
    out[2] = eps * sc + eps * qc - delta * ci - mu * C - phi * C
    out[3] = delta * ci - nu * I - phi * I
    out[4] = mu * C + nu * I - phi * R


cdef inline int _check(double* y, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t x
    cdef double v
    for x in range(m):
        v = y[x]
        if not isfinite(v):
            return NONFINITE
        if v < 0.0:
            if v < -CLAMP_TOL:
                return NEGATIVE
            y[x] = 0.0
    return OK


def rk4_reduced(y0, p, times, eps):
    cdef double[::1] tv = np.array(times, dtype=np.float64, order="C")
    cdef double[::1] ev = np.array(eps, dtype=np.float64, order="C")
    cdef double[::1] pv = np.array(p, dtype=np.float64, order="C")
    cdef Py_ssize_t n = tv.shape[0]
    states_arr = np.empty((n, 5), dtype=np.float64)
    cdef double[:, ::1] st = states_arr
    cdef double y[5]
    cdef double k1[5]
    cdef double k2[5]
    cdef double k3[5]
    cdef double k4[5]
    cdef double tmp[5]
    cdef double lam = pv[0], alpha = pv[1], delta = pv[2], mu = pv[3], nu = pv[4], phi = pv[5]
    cdef double h, half, h6, e
    cdef Py_ssize_t step, x
    cdef int status = OK
    cdef Py_ssize_t fail = n - 1
    y0a = np.array(y0, dtype=np.float64, order="C")
    for x in range(5):
        y[x] = y0a[x]
        st[0, x] = y[x]
    with nogil:
        for step in range(n - 1):
            h = tv[step + 1] - tv[step]
            e = ev[step]
            half = 0.5 * h
            _rhs(y, lam, alpha, e, delta, mu, nu, phi, k1)
            for x in range(5):
                tmp[x] = y[x] + half * k1[x]
            _rhs(tmp, lam, alpha, e, delta, mu, nu, phi, k2)
            for x in range(5):
                tmp[x] = y[x] + half * k2[x]
            _rhs(tmp, lam, alpha, e, delta, mu, nu, phi, k3)
            for x in range(5):
                tmp[x] = y[x] + h * k3[x]
            _rhs(tmp, lam, alpha, e, delta, mu, nu, phi, k4)
            h6 = h / 6.0
            for x in range(5):
                y[x] = y[x] + h6 * (k1[x] + 2.0 * k2[x] + 2.0 * k3[x] + k4[x])
            status = _check(y, 5)
            if status != OK:
                fail = step
                break
            for x in range(5):
                st[step + 1, x] = y[x]
    if status != OK:
        return states_arr[:fail + 1].copy(), status, fail
    return states_arr, OK, n - 1


cdef void _rhs_network(double[:, ::1] y, double[:, ::1] par, double eps,
                       double[:, ::1] t, double[::1] rowsum,
                       double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t k = y.shape[0]
    cdef Py_ssize_t i, j, x
    cdef double d[5]
    cdef double inflow
    for i in range(k):
        _rhs(&y[i, 0], par[0, i], par[1, i], eps, par[2, i], par[3, i],
             par[4, i], par[5, i], d)
        for x in range(5):
            inflow = 0.0
            for j in range(k):
                inflow += t[j, i] * y[j, x]
            out[i, x] = d[x] + (inflow - rowsum[i] * y[i, x])


def rk4_network(y0, params, t_matrix, times, eps):
    cdef double[::1] tv = np.array(times, dtype=np.float64, order="C")
    cdef double[::1] ev = np.array(eps, dtype=np.float64, order="C")
    cdef double[:, ::1] par = np.array(np.vstack(params), dtype=np.float64, order="C")
    cdef double[:, ::1] t = np.array(t_matrix, dtype=np.float64, order="C")
    cdef Py_ssize_t k = t.shape[0]
    cdef Py_ssize_t n = tv.shape[0]
    cdef double[::1] rowsum = np.zeros(k, dtype=np.float64)
    cdef Py_ssize_t i, j, x, step
    cdef double acc
    for i in range(k):
        acc = 0.0
        for j in range(k):
            acc += t[i, j]
        rowsum[i] = acc
    states_arr = np.empty((n, k, 5), dtype=np.float64)
    cdef double[:, :, ::1] st = states_arr
    cdef double[:, ::1] y = np.array(y0, dtype=np.float64, order="C").reshape(k, 5)
    cdef double[:, ::1] k1 = np.empty((k, 5))
    cdef double[:, ::1] k2 = np.empty((k, 5))
    cdef double[:, ::1] k3 = np.empty((k, 5))
    cdef double[:, ::1] k4 = np.empty((k, 5))
    cdef double[:, ::1] tmp = np.empty((k, 5))
    cdef double h, half, h6, e
    cdef int status = OK
    cdef Py_ssize_t fail = n - 1
    st[0, :, :] = y
    with nogil:
        for step in range(n - 1):
            h = tv[step + 1] - tv[step]
            e = ev[step]
            half = 0.5 * h
            _rhs_network(y, par, e, t, rowsum, k1)
            for i in range(k):
                for x in range(5):
                    tmp[i, x] = y[i, x] + half * k1[i, x]
            _rhs_network(tmp, par, e, t, rowsum, k2)
            for i in range(k):
                for x in range(5):
                    tmp[i, x] = y[i, x] + half * k2[i, x]
            _rhs_network(tmp, par, e, t, rowsum, k3)
            for i in range(k):
                for x in range(5):
                    tmp[i, x] = y[i, x] + h * k3[i, x]
            _rhs_network(tmp, par, e, t, rowsum, k4)
            h6 = h / 6.0
            for i in range(k):
                for x in range(5):
                    y[i, x] = y[i, x] + h6 * (k1[i, x] + 2.0 * k2[i, x] + 2.0 * k3[i, x] + k4[i, x])
            for i in range(k):
                status = _check(&y[i, 0], 5)
                if status != OK:
                    break
            if status != OK:
                fail = step
                break
            st[step + 1, :, :] = y
    if status != OK:
        return states_arr[:fail + 1].copy(), status, fail
    return states_arr, OK, n - 1

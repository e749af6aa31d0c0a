# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the batch projections in :mod:`exproj.projections`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, INFINITY, fmax, fmin, nextafter

from exproj.projections import NewtonError

cnp.import_array()


cdef inline double _resid(double t, double z, double s, double rho) nogil:
    cdef double et = exp(t)
    return et * (t - z) - rho * rho / et + rho * s


cdef inline double _sqdist(double t, double z, double s, double rho) nogil:
    cdef double d = rho * exp(-t) - s
    return (t - z) * (t - z) + d * d


cdef inline double _ulp(double x) nogil:
    return nextafter(x, INFINITY) - x


cdef int _newton(double z, double s, double rho, double a, double b, double t,
                 double tol, int max_iters, double* out) nogil:
    """Bracketed Newton; returns iterations used or -1 on failure."""
    cdef double ft, d, tn
    cdef int it = 0
    while True:
        ft = _resid(t, z, s, rho)
        if fabs(ft) <= tol:
            break
        if it >= max_iters:
            out[0] = t
            return -1
        if ft < 0.0:
            a = t
        else:
            b = t
        d = exp(t) * (1.0 + t - z) + rho * rho * exp(-t)
        it += 1
        if d > 0.0 and fabs(ft / d) <= 2.0 * _ulp(fmax(fabs(t), 1.0)):
            t -= ft / d
            break
        if d > 0.0:
            tn = t - ft / d
        else:
            tn = 0.5 * (a + b)
        if not (a < tn and tn < b):
            tn = 0.5 * (a + b)
        if b - a <= 4.0 * _ulp(fmax(fmax(fabs(a), fabs(b)), 1.0)):
            t = tn
            break
        t = tn
    out[0] = t
    return it


cdef int _nearest(double z, double s, double rho, double tol, int max_iters,
                  double* t_out) nogil:
    """Global nearest curve parameter; mirrors ``nearest_on_curve``."""
    cdef double s0 = rho * exp(-z)
    cdef double gap = s - s0
    cdef double lo, hi, w0 = 0.0, w1 = 0.0, disc, root, tangent
    cdef double pa[2]
    cdef double pb[2]
    cdef int npieces = 1, k, rc, it
    cdef double a, b, best_d = INFINITY, best_t = z, d, troot
    if gap == 0.0:
        t_out[0] = z
        return 0
    if gap > 0.0:
        lo = fmax(z - gap, log(rho / s))
        hi = z
    else:
        lo = z
        hi = z - gap
        if s > 0.0:
            hi = fmin(hi, log(rho / s))
    pa[0] = lo
    pb[0] = hi
    disc = s * s - 8.0
    if s > 0.0 and disc > 0.0:
        root = sqrt(disc)
        w0 = log(rho / (0.25 * (s + root)))
        w1 = log(rho / (0.25 * (s - root)))
        if w0 < hi and w1 > lo:
            npieces = 2
            pb[0] = fmin(hi, w0)
            pa[1] = fmax(lo, w1)
            pb[1] = hi
    tangent = z - s0 * gap / (1.0 + s0 * s0)
    it = 0
    for k in range(npieces):
        a = pa[k]
        b = pb[k]
        if a > b:
            continue
        d = _sqdist(a, z, s, rho)
        if d < best_d:
            best_d = d; best_t = a; it = 0
        d = _sqdist(b, z, s, rho)
        if d < best_d:
            best_d = d; best_t = b; it = 0
        if a < b and _resid(a, z, s, rho) <= 0.0 and _resid(b, z, s, rho) >= 0.0:
            rc = _newton(z, s, rho, a, b, fmin(fmax(tangent, a), b), tol, max_iters, &troot)
            if rc < 0:
                t_out[0] = troot
                return -1
            d = _sqdist(troot, z, s, rho)
            if d < best_d:
                best_d = d; best_t = troot; it = rc
    t_out[0] = best_t
    return it


def nearest_on_curve_batch(z, s, rho, double tol=1e-12, int max_iters=20):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(np.broadcast_to(rho, np.shape(z)), dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    t = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    cdef double[::1] tv = t
    cdef long long[::1] iv = iters
    cdef int rc
    for i in range(n):
        rc = _nearest(zv[i], sv[i], rv[i], tol, max_iters, &tv[i])
        if rc < 0:
            raise NewtonError(f"no convergence in {max_iters} steps (z={zv[i]}, sigma={sv[i]}, rho={rv[i]})")
        iv[i] = rc
    return t, iters


def surface_batch(v):
    cdef const double[:, ::1] src = np.ascontiguousarray(np.asarray(v, dtype=np.float64).reshape(-1, 4))
    out = np.empty((src.shape[0], 4))
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, n = src.shape[0]
    cdef double nu, s, k
    with nogil:
        for i in range(n):
            s = src[i, 3]
            nu = sqrt(src[i, 0] * src[i, 0] + src[i, 1] * src[i, 1] + src[i, 2] * src[i, 2])
            if s == nu:
                dst[i, 0] = src[i, 0]; dst[i, 1] = src[i, 1]; dst[i, 2] = src[i, 2]; dst[i, 3] = s
            elif s <= -nu:
                dst[i, 0] = 0.0; dst[i, 1] = 0.0; dst[i, 2] = 0.0; dst[i, 3] = 0.0
            else:
                k = 0.5 * (nu + s)
                if nu > 0.0:
                    dst[i, 0] = k * src[i, 0] / nu
                    dst[i, 1] = k * src[i, 1] / nu
                    dst[i, 2] = k * src[i, 2] / nu
                else:
                    dst[i, 0] = k; dst[i, 1] = 0.0; dst[i, 2] = 0.0
                dst[i, 3] = k
    return out


def cone_batch(v):
    cdef const double[:, ::1] src = np.ascontiguousarray(np.asarray(v, dtype=np.float64).reshape(-1, 4))
    out = np.empty((src.shape[0], 4))
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, n = src.shape[0]
    cdef double nu, s, k
    with nogil:
        for i in range(n):
            s = src[i, 3]
            nu = sqrt(src[i, 0] * src[i, 0] + src[i, 1] * src[i, 1] + src[i, 2] * src[i, 2])
            if nu <= s:
                dst[i, 0] = src[i, 0]; dst[i, 1] = src[i, 1]; dst[i, 2] = src[i, 2]; dst[i, 3] = s
            elif s <= -nu:
                dst[i, 0] = 0.0; dst[i, 1] = 0.0; dst[i, 2] = 0.0; dst[i, 3] = 0.0
            else:
                k = 0.5 * (nu + s) / nu
                dst[i, 0] = k * src[i, 0]; dst[i, 1] = k * src[i, 1]; dst[i, 2] = k * src[i, 2]
                dst[i, 3] = 0.5 * (nu + s)
    return out


def band_batch(v, double lo0, double hi0, double rho1, double rho2,
               double tol=1e-12, int max_iters=20):
    out = np.array(v, dtype=np.float64, copy=True)
    cdef double[::1] w = out
    cdef Py_ssize_t n = (w.shape[0] - 1) // 2, k
    cdef double s, z, ez, rho, t
    cdef int rc
    w[0] = fmin(fmax(w[0], lo0), hi0)
    for k in range(n):
        s = w[1 + 2 * k]
        z = w[2 + 2 * k]
        ez = exp(-z)
        if s < rho1 * ez:
            rho = rho1
        elif s > rho2 * ez:
            rho = rho2
        else:
            continue
        rc = _nearest(z, s, rho, tol, max_iters, &t)
        if rc < 0:
            raise NewtonError(f"no convergence in {max_iters} steps (z={z}, sigma={s}, rho={rho})")
        w[1 + 2 * k] = rho * exp(-t)
        w[2 + 2 * k] = t
    return out

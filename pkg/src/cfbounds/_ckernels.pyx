# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled residual kernels.

Same contract as ``cfbounds._pykernels``. Two-point kernels use the sample
``(1, x)`` with weights ``(1 - q, q)`` rescaled so ``x_min = 1`` (upper side)
or ``x_max = 1`` (lower side). Log means are offsets from the log of the
heaviest value, which keeps the ``log1p`` sums well conditioned.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, NAN, exp, expm1, fabs, log, log1p

cnp.import_array()

DEF OVERFLOW_EXP = 700.0


cdef inline double _two_point_offset(double lx, double q, double t, bint at_x) nogil:
    # log mean of (1, x) with weights (1 - q, q), minus the log of the
    # heavier value: 0 when at_x is false, lx otherwise
    cdef double z
    if t == 0.0:
        return q * lx - (lx if at_x else 0.0)
    if fabs(t * lx) < 1e-7:
        return q * lx - (lx if at_x else 0.0) + 0.5 * t * q * (1.0 - q) * lx * lx
    if at_x:
        z = -t * lx
        if z > OVERFLOW_EXP:
            return (z + log((1.0 - q) + q * exp(-z))) / t
        return log1p((1.0 - q) * expm1(z)) / t
    z = t * lx
    if z > OVERFLOW_EXP:
        return (z + log((1.0 - q) * exp(-z) + q)) / t
    return log1p(q * expm1(z)) / t


cdef inline void _eval(double x, double lx, double lc, double inv_c, double q,
                       double r, double s, bint upper, double* res, double* gap) nogil:
    # lc, inv_c: log and reciprocal of the normalizing value
    cdef bint at_x = q > 0.5
    cdef double c = lx if at_x else 0.0
    cdef double dr = _two_point_offset(lx, q, r, at_x)
    cdef double ds = _two_point_offset(lx, q, s, at_x)
    cdef double d, bound
    gap[0] = exp(c + ds - lc) * expm1(dr - ds)
    d = (x - 1.0) * inv_c
    bound = 0.5 * (r - s) * q * (1.0 - q) * d * d
    if upper:
        res[0] = bound - gap[0]
    else:
        res[0] = gap[0] - bound


cdef inline double _norm_log(double lx, bint upper) nogil:
    if upper:
        return lx if lx < 0.0 else 0.0
    return lx if lx > 0.0 else 0.0


def two_point_eval(double x, double q, double r, double s, bint upper):
    cdef double res, gap, lx = log(x)
    cdef double lc = _norm_log(lx, upper)
    _eval(x, lx, lc, exp(-lc), q, r, s, upper, &res, &gap)
    return res, gap


def two_point_grid(xs, qs, double r, double s, bint upper):
    cdef double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(qs, dtype=np.float64)
    cdef Py_ssize_t nx = xv.shape[0], nq = qv.shape[0], i, j
    res_arr = np.empty((nx, nq), dtype=np.float64)
    gap_arr = np.empty((nx, nq), dtype=np.float64)
    cdef double[:, ::1] res = res_arr
    cdef double[:, ::1] gap = gap_arr
    cdef double lx, lc, inv_c
    with nogil:
        for i in range(nx):
            lx = log(xv[i])
            lc = _norm_log(lx, upper)
            inv_c = exp(-lc)
            for j in range(nq):
                _eval(xv[i], lx, lc, inv_c, qv[j], r, s, upper, &res[i, j], &gap[i, j])
    return res_arr, gap_arr


cdef double _row_offset(const double* x, const double* lx, const double* q,
                        Py_ssize_t k, double t, double c, double spread,
                        bint has_zero) nogil:
    # ln M_t - c for one padded row; the caller handles means that are 0
    cdef Py_ssize_t j
    cdef double acc = 0.0, m = 0.0, u, z, top = -INFINITY
    if t == 0.0:
        for j in range(k):
            if q[j] > 0.0:
                acc += q[j] * (lx[j] - c)
        return acc
    if fabs(t) * spread < 1e-7 and not has_zero:
        for j in range(k):
            if q[j] > 0.0:
                m += q[j] * (lx[j] - c)
        for j in range(k):
            if q[j] > 0.0:
                u = lx[j] - c - m
                acc += q[j] * u * u
        return m + 0.5 * t * acc
    for j in range(k):
        if q[j] > 0.0 and x[j] > 0.0:
            z = t * (lx[j] - c)
            if z > top:
                top = z
    if top > OVERFLOW_EXP:
        for j in range(k):
            if q[j] > 0.0 and x[j] > 0.0:
                acc += q[j] * exp(t * (lx[j] - c) - top)
        return (top + log(acc)) / t
    for j in range(k):
        if q[j] > 0.0:
            acc += q[j] * (expm1(t * (lx[j] - c)) if x[j] > 0.0 else -1.0)
    return log1p(acc) / t


def batch_check(xs, qs, double r, double s):
    """``(lower, gap, upper)`` for each row of padded ``(m, k)`` arrays.

    Entries with zero weight are padding. ``upper`` is NaN for rows whose
    smallest value is 0.
    """
    cdef double[:, ::1] X = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, ::1] Q = np.ascontiguousarray(qs, dtype=np.float64)
    with np.errstate(divide="ignore"):
        lx_arr = np.log(np.asarray(X))
    cdef double[:, ::1] LX = lx_arr
    cdef Py_ssize_t m = X.shape[0], k = X.shape[1], i, j
    lower_arr = np.empty(m)
    gap_arr = np.empty(m)
    upper_arr = np.empty(m)
    cdef double[::1] lower = lower_arr
    cdef double[::1] gap = gap_arr
    cdef double[::1] upper = upper_arr
    cdef double lo, lo_pos, hi, a, var, d, dr, ds, h, c, w_ref
    cdef bint has_zero
    with nogil:
        for i in range(m):
            lo = INFINITY
            lo_pos = INFINITY
            hi = 0.0
            a = 0.0
            c = 0.0
            w_ref = -1.0
            for j in range(k):
                if Q[i, j] > 0.0:
                    lo = min(lo, X[i, j])
                    hi = max(hi, X[i, j])
                    if X[i, j] > 0.0:
                        lo_pos = min(lo_pos, X[i, j])
                        if Q[i, j] > w_ref:
                            w_ref = Q[i, j]
                            c = LX[i, j]
                    a += Q[i, j] * X[i, j]
            if lo == hi:
                lower[i] = gap[i] = upper[i] = 0.0
                continue
            var = 0.0
            for j in range(k):
                if Q[i, j] > 0.0:
                    d = X[i, j] - a
                    var += Q[i, j] * d * d
            has_zero = lo == 0.0
            dr = _row_offset(&X[i, 0], &LX[i, 0], &Q[i, 0], k, r, c,
                             log(hi) - log(lo_pos), has_zero)
            if has_zero and s <= 0.0:
                gap[i] = exp(c + dr)
            else:
                ds = _row_offset(&X[i, 0], &LX[i, 0], &Q[i, 0], k, s, c,
                                 log(hi) - log(lo_pos), has_zero)
                gap[i] = exp(c + ds) * expm1(dr - ds)
            h = 0.5 * (r - s) * var
            lower[i] = h / hi
            upper[i] = h / lo if lo > 0.0 else NAN
    return lower_arr, gap_arr, upper_arr

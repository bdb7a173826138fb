# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scattered cubic B-spline evaluation (see _fallback for contract)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline Py_ssize_t fold(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t period
    if n == 1:
        return 0
    period = 2 * n - 2
    i = i % period
    if i < 0:
        i += period
    if i >= n:
        i = period - i
    return i


def eval_cubic_bspline_3d(coeffs, points):
    c_arr = np.ascontiguousarray(coeffs, dtype=np.float64)
    p_arr = np.ascontiguousarray(points, dtype=np.float64)
    if c_arr.ndim != 3:
        raise ValueError("coeffs must be a 3D array")
    if p_arr.ndim != 2 or p_arr.shape[1] != 3:
        raise ValueError("points must be (N, 3)")
    out = np.empty(p_arr.shape[0], dtype=np.float64)
    _eval(c_arr, p_arr, out)
    return out


cdef void _eval(
    const double[:, :, ::1] coeffs,
    const double[:, ::1] points,
    double[::1] out,
) noexcept nogil:
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t nx = coeffs.shape[0]
    cdef Py_ssize_t ny = coeffs.shape[1]
    cdef Py_ssize_t nz = coeffs.shape[2]
    cdef Py_ssize_t idx, a, b, c
    cdef Py_ssize_t ix[4]
    cdef Py_ssize_t iy[4]
    cdef Py_ssize_t iz[4]
    cdef double wx[4]
    cdef double wy[4]
    cdef double wz[4]
    cdef double p, t, t2, t3, acc, wa, wab
    cdef Py_ssize_t base

    for idx in range(n_pts):
        p = points[idx, 0]
        base = <Py_ssize_t>floor(p)
        t = p - base
        t2 = t * t
        t3 = t2 * t
        wx[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0
        wx[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0
        wx[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0
        wx[3] = t3 / 6.0
        for a in range(4):
            ix[a] = fold(base - 1 + a, nx)

        p = points[idx, 1]
        base = <Py_ssize_t>floor(p)
        t = p - base
        t2 = t * t
        t3 = t2 * t
        wy[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0
        wy[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0
        wy[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0
        wy[3] = t3 / 6.0
        for a in range(4):
            iy[a] = fold(base - 1 + a, ny)

        p = points[idx, 2]
        base = <Py_ssize_t>floor(p)
        t = p - base
        t2 = t * t
        t3 = t2 * t
        wz[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0
        wz[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0
        wz[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0
        wz[3] = t3 / 6.0
        for a in range(4):
            iz[a] = fold(base - 1 + a, nz)

        acc = 0.0
        for a in range(4):
            wa = wx[a]
            for b in range(4):
                wab = wa * wy[b]
                for c in range(4):
                    acc += wab * wz[c] * coeffs[ix[a], iy[b], iz[c]]
        out[idx] = acc

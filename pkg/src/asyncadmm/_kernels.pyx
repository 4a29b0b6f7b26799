# cython: language_level=3
"""Compiled inner solvers.  Signatures mirror ``_kernels_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline void _matvec(const double[:, ::1] M, const double[::1] x,
                         double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(M.shape[0]):
        acc = 0.0
        for j in range(M.shape[1]):
            acc += M[i, j] * x[j]
        out[i] = acc


cdef void _pr_grad(const double[:, ::1] A, const double[:, ::1] B,
                   const double[::1] b, const double[::1] x,
                   double[::1] re, double[::1] im, double[::1] r,
                   double[::1] grad) noexcept nogil:
    # fills re, im, r and the smooth gradient
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1]
    cdef double c = 4.0 / m
    cdef double wr, wi
    _matvec(A, x, re)
    _matvec(B, x, im)
    for j in range(n):
        grad[j] = 0.0
    for i in range(m):
        r[i] = re[i] * re[i] + im[i] * im[i] - b[i]
        wr = r[i] * re[i]
        wi = r[i] * im[i]
        for j in range(n):
            grad[j] += wr * A[i, j] + wi * B[i, j]
    for j in range(n):
        grad[j] *= c


def pr_value_grad(const double[:, ::1] A, const double[:, ::1] B,
                  const double[::1] b, const double[::1] x):
    """Value and gradient of ``mean((|<x,t>|^2 - b)^2)``."""
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1]
    cdef double[::1] re = np.empty(m)
    cdef double[::1] im = np.empty(m)
    cdef double[::1] r = np.empty(m)
    grad_arr = np.empty(n)
    cdef double[::1] grad = grad_arr
    cdef double val = 0.0
    cdef Py_ssize_t i
    with nogil:
        _pr_grad(A, B, b, x, re, im, r, grad)
        for i in range(m):
            val += r[i] * r[i]
    return val / m, grad_arr


def pr_prox(const double[:, ::1] A, const double[:, ::1] B,
            const double[::1] b, const double[::1] center,
            double weight, double tol, Py_ssize_t max_iters):
    """Backtracking gradient descent on ``f(u) + weight/2 |u - center|^2``."""
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1]
    x_arr = np.array(center, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] re = np.empty(m)
    cdef double[::1] im = np.empty(m)
    cdef double[::1] r = np.empty(m)
    cdef double[::1] g = np.empty(n)
    cdef double[::1] step = np.empty(n)
    cdef double[::1] ra = np.empty(m)
    cdef double[::1] ia = np.empty(m)
    cdef double t = 1.0 / weight
    cdef double t_floor = 1e-30 / weight
    cdef double gn2, df, dprox, dq, q2
    cdef Py_ssize_t iters = 0, i, j
    cdef bint converged = False
    cdef bint stalled = False
    with nogil:
        while True:
            _pr_grad(A, B, b, x, re, im, r, g)
            gn2 = 0.0
            for j in range(n):
                g[j] += weight * (x[j] - center[j])
                gn2 += g[j] * g[j]
            if gn2 <= tol * tol:
                converged = True
                break
            if iters >= max_iters:
                break
            t = 2.0 * t
            while True:
                for j in range(n):
                    step[j] = -t * g[j]
                _matvec(A, step, ra)
                _matvec(B, step, ia)
                df = 0.0
                for i in range(m):
                    dq = ra[i] * (2.0 * re[i] + ra[i]) + ia[i] * (2.0 * im[i] + ia[i])
                    q2 = 2.0 * r[i] + dq
                    df += dq * q2
                df /= m
                dprox = 0.0
                for j in range(n):
                    dprox += step[j] * (2.0 * (x[j] - center[j]) + step[j])
                if df + 0.5 * weight * dprox <= -0.5 * t * gn2:
                    break
                t *= 0.5
                if t < t_floor:
                    stalled = True
                    break
            if stalled:
                break
            for j in range(n):
                x[j] += step[j]
            iters += 1
    return x_arr, iters, bool(converged)


def quad_composite_prox(const double[:, ::1] H, const double[::1] h,
                        double l1, double radius, double step,
                        const double[::1] x0, double tol, Py_ssize_t max_iters):
    """Proximal gradient for ``u'Hu/2 - h'u + l1*|u|_1 + indicator(|u| <= radius)``."""
    cdef Py_ssize_t n = H.shape[0], j
    x_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] hx = np.empty(n)
    cdef double[::1] y = np.empty(n)
    cdef double thresh = step * l1
    cdef double nrm, scale, diff, a
    cdef Py_ssize_t iters = 0
    cdef bint converged = False
    with nogil:
        while iters < max_iters:
            _matvec(H, x, hx)
            nrm = 0.0
            for j in range(n):
                a = x[j] - step * (hx[j] - h[j])
                if l1 > 0.0:
                    if a > thresh:
                        a = a - thresh
                    elif a < -thresh:
                        a = a + thresh
                    else:
                        a = 0.0
                y[j] = a
                nrm += a * a
            if radius > 0.0:
                nrm = sqrt(nrm)
                if nrm > radius:
                    scale = radius / nrm
                    for j in range(n):
                        y[j] *= scale
            diff = 0.0
            for j in range(n):
                a = y[j] - x[j]
                diff += a * a
                x[j] = y[j]
            iters += 1
            if sqrt(diff) <= tol:
                converged = True
                break
    return x_arr, iters, bool(converged)

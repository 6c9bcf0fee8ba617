# cython: language_level=3
"""Compiled kernels, mirroring ``_pykernel`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign, INFINITY

cnp.import_array()

cdef int MAX_SWEEPS = 100
cdef double CONV_TOL = 1e-12


cdef void _householder_rows(const double[::1] v, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, j
    cdef double norm = 0.0, alpha, u0, uu, c
    for i in range(n):
        norm += v[i] * v[i]
    norm = sqrt(norm)
    if v[0] != 0.0:
        alpha = -copysign(norm, v[0])
    else:
        alpha = -norm
    u0 = v[0] - alpha
    uu = u0 * u0
    for i in range(1, n):
        uu += v[i] * v[i]
    for i in range(1, n):
        c = 2.0 * v[i] / uu
        out[i - 1, 0] = -c * u0
        for j in range(1, n):
            out[i - 1, j] = -c * v[j]
        out[i - 1, i] += 1.0


cdef void _jacobi(double[:, ::1] a, double[::1] vals, double[:, ::1] v, bint want_vectors) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k, p, q, sweep
    cdef double fro = 0.0, off, apq, theta, t, c, s, akp, akq, apk, aqk, vkp, vkq
    if want_vectors:
        for i in range(n):
            for j in range(n):
                v[i, j] = 1.0 if i == j else 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = sqrt(fro)
    if fro == 0.0:
        for i in range(n):
            vals[i] = 0.0
        return
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if sqrt(off) <= CONV_TOL * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                if want_vectors:
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
    for i in range(n):
        vals[i] = a[i, i]


def householder_complement(v):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty((vv.shape[0] - 1, vv.shape[0]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    if vv.shape[0] > 1:
        _householder_rows(vv, ov)
    return out


def jacobi_eigh(S, bint want_vectors=False):
    a = np.array(S, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    vals = np.empty(n, dtype=np.float64)
    vecs = np.empty((n, n), dtype=np.float64)
    _jacobi(a, vals, vecs, want_vectors)
    order = np.argsort(vals, kind="stable")
    if not want_vectors:
        return vals[order], None
    return vals[order], vecs[:, order]


def lu_det(M):
    a = np.array(M, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] A = a
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, j, k, piv
    cdef double det = 1.0, best, akk, m, tmp
    for k in range(n):
        piv = k
        best = fabs(A[k, k])
        for i in range(k + 1, n):
            if fabs(A[i, k]) > best:
                best = fabs(A[i, k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            for j in range(n):
                tmp = A[k, j]
                A[k, j] = A[piv, j]
                A[piv, j] = tmp
            det = -det
        akk = A[k, k]
        det *= akk
        for i in range(k + 1, n):
            m = A[i, k] / akk
            if m != 0.0:
                for j in range(k + 1, n):
                    A[i, j] -= m * A[k, j]
    return det


def quad_form(M, w):
    cdef const double[:, ::1] A = np.ascontiguousarray(M, dtype=np.float64)
    cdef const double[::1] x = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0, acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * x[j]
        total += x[i] * acc
    return total


def kernel_max_eig_batch(G, J, double tol):
    cdef const double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[:, :, ::1] jac = np.ascontiguousarray(J, dtype=np.float64)
    cdef Py_ssize_t m = g.shape[0]
    cdef Py_ssize_t n = g.shape[1]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    cdef double[:, ::1] S = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] B = np.empty((max(n - 1, 1), n), dtype=np.float64)
    cdef double[:, ::1] SB = np.empty((n, max(n - 1, 1)), dtype=np.float64)
    cdef double[:, ::1] K = np.empty((max(n - 1, 1), max(n - 1, 1)), dtype=np.float64)
    cdef double[::1] vals = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] dummy = np.empty((1, 1), dtype=np.float64)
    cdef Py_ssize_t idx, i, j, k, r, c
    cdef double norm, acc, best
    with nogil:
        for idx in range(m):
            for i in range(n):
                for j in range(n):
                    S[i, j] = 0.5 * (jac[idx, i, j] + jac[idx, j, i])
            norm = 0.0
            for i in range(n):
                norm += g[idx, i] * g[idx, i]
            norm = sqrt(norm)
            if norm <= tol:
                _jacobi(S, vals, dummy, False)
                best = vals[0]
                for i in range(1, n):
                    if vals[i] > best:
                        best = vals[i]
                res[idx] = best
                continue
            if n == 1:
                res[idx] = -INFINITY
                continue
            _householder_rows(g[idx], B)
            for i in range(n):
                for r in range(n - 1):
                    acc = 0.0
                    for k in range(n):
                        acc += S[i, k] * B[r, k]
                    SB[i, r] = acc
            for r in range(n - 1):
                for c in range(n - 1):
                    acc = 0.0
                    for i in range(n):
                        acc += B[r, i] * SB[i, c]
                    K[r, c] = acc
            _jacobi(K, vals, dummy, False)
            best = vals[0]
            for i in range(1, n - 1):
                if vals[i] > best:
                    best = vals[i]
            res[idx] = best
    return out

"""Pure-Python kernels.

Reference implementation of the routines in ``_ckernel.pyx``. The two
modules implement the same algorithms operation for operation; the
Cython one is used when it was compiled. Inputs are float64 numpy
arrays, converted to nested lists so the loops run on Python floats.
"""
import math

import numpy as np

MAX_SWEEPS = 100
CONV_TOL = 1e-12


def _householder_rows(v):
    n = len(v)
    norm = math.sqrt(sum(x * x for x in v))
    alpha = -math.copysign(norm, v[0]) if v[0] != 0.0 else -norm
    u = list(v)
    u[0] -= alpha
    uu = sum(x * x for x in u)
    rows = []
    for i in range(1, n):
        c = 2.0 * u[i] / uu
        row = [-c * u[j] for j in range(n)]
        row[i] += 1.0
        rows.append(row)
    return rows


def _jacobi(a, want_vectors):
    # a is a symmetric n x n list of lists, destroyed in place
    n = len(a)
    v = None
    if want_vectors:
        v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    fro = math.sqrt(sum(a[i][j] * a[i][j] for i in range(n) for j in range(n)))
    if fro == 0.0:
        return [0.0] * n, v
    for _ in range(MAX_SWEEPS):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i][j] * a[i][j]
        if math.sqrt(off) <= CONV_TOL * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                if v is not None:
                    for k in range(n):
                        vkp = v[k][p]
                        vkq = v[k][q]
                        v[k][p] = c * vkp - s * vkq
                        v[k][q] = s * vkp + c * vkq
    return [a[i][i] for i in range(n)], v


def householder_complement(v):
    """Rows 2..n of the reflector mapping ``v`` onto the first axis."""
    v = np.asarray(v, dtype=np.float64).tolist()
    return np.array(_householder_rows(v), dtype=np.float64).reshape(len(v) - 1, len(v))


def jacobi_eigh(S, want_vectors=False):
    a = np.asarray(S, dtype=np.float64).tolist()
    vals, vecs = _jacobi(a, want_vectors)
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    out_vals = np.array([vals[i] for i in order], dtype=np.float64)
    if not want_vectors:
        return out_vals, None
    V = np.array(vecs, dtype=np.float64).reshape(len(vals), len(vals))
    return out_vals, V[:, order]


def lu_det(M):
    a = np.asarray(M, dtype=np.float64).tolist()
    n = len(a)
    det = 1.0
    for k in range(n):
        piv = k
        best = abs(a[k][k])
        for i in range(k + 1, n):
            if abs(a[i][k]) > best:
                best = abs(a[i][k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        akk = a[k][k]
        det *= akk
        for i in range(k + 1, n):
            m = a[i][k] / akk
            if m != 0.0:
                row_i = a[i]
                row_k = a[k]
                for j in range(k + 1, n):
                    row_i[j] -= m * row_k[j]
    return det


def quad_form(M, w):
    m = np.asarray(M, dtype=np.float64).tolist()
    w = np.asarray(w, dtype=np.float64).tolist()
    total = 0.0
    for i, wi in enumerate(w):
        row = m[i]
        acc = 0.0
        for j, wj in enumerate(w):
            acc += row[j] * wj
        total += wi * acc
    return total


def kernel_max_eig_batch(G, J, tol):
    """Largest eigenvalue of sym(J[i]) restricted to the kernel of G[i].

    Where ``|G[i]| <= tol`` the whole space is used instead of the kernel.
    """
    G = np.asarray(G, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    m, n = G.shape
    out = np.empty(m, dtype=np.float64)
    for idx in range(m):
        g = G[idx].tolist()
        jac = J[idx].tolist()
        S = [[0.5 * (jac[i][j] + jac[j][i]) for j in range(n)] for i in range(n)]
        norm = math.sqrt(sum(x * x for x in g))
        if norm <= tol:
            vals, _ = _jacobi(S, False)
            out[idx] = max(vals)
            continue
        if n == 1:
            out[idx] = -math.inf
            continue
        B = _householder_rows(g)
        SB = [[sum(S[i][k] * B[r][k] for k in range(n)) for r in range(n - 1)] for i in range(n)]
        K = [[sum(B[r][i] * SB[i][c] for i in range(n)) for c in range(n - 1)] for r in range(n - 1)]
        vals, _ = _jacobi(K, False)
        out[idx] = max(vals)
    return out

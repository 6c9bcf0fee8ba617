"""Small dense linear algebra used by every test mode.

Matrices are float64 numpy arrays. The arithmetic lives in one of two
interchangeable backends:

* ``qcert._ckernel`` -- Cython, compiled at install time when possible;
* ``qcert._pykernel`` -- pure Python, always available.

The compiled backend is picked at import unless ``QCERT_KERNEL=python`` is
set in the environment. Both run the same algorithms (Householder kernel
basis, cyclic Jacobi, row-pivoted LU) and agree to round-off.
"""
import os

import numpy as np

from qcert import _pykernel
from qcert.errors import DimensionMismatch, NotSymmetric, ZeroVector

try:
    from qcert import _ckernel
except ImportError:  # extension not built
    _ckernel = None

SYMMETRY_TOL = 1e-8


def available_backends():
    out = {"python": _pykernel}
    if _ckernel is not None:
        out["cython"] = _ckernel
    return out


def _select_backend():
    wanted = os.environ.get("QCERT_KERNEL", "").strip().lower()
    backends = available_backends()
    if wanted:
        if wanted not in backends:
            raise ImportError(f"QCERT_KERNEL={wanted!r} requested but not available")
        return wanted, backends[wanted]
    if "cython" in backends:
        return "cython", backends["cython"]
    return "python", _pykernel


BACKEND, _impl = _select_backend()


def set_backend(name):
    """Switch the active backend ("cython" or "python"); returns the previous name."""
    global BACKEND, _impl
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} not available (have {sorted(backends)})")
    previous = BACKEND
    BACKEND, _impl = name, backends[name]
    return previous


def as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_matrix(M, square=True):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise DimensionMismatch(f"expected a non-empty matrix, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def sym(M):
    """Symmetric part (M + M^T) / 2."""
    M = np.asarray(M, dtype=np.float64)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def kernel_basis(v, tol=1e-12):
    """Orthonormal basis of the hyperplane orthogonal to ``v``.

    Returns an ``(n-1, n)`` array whose rows are the basis vectors. They are
    rows 2..n of the Householder reflector taking ``v`` to a multiple of
    the first axis, so the result is deterministic.
    """
    v = as_vector(v)
    if np.linalg.norm(v) <= tol:
        raise ZeroVector(f"|v| = {np.linalg.norm(v):.3g} <= tol = {tol:.3g}")
    if v.size == 1:
        return np.empty((0, 1))
    return _impl.householder_complement(np.ascontiguousarray(v))


def _check_symmetric(S, tol):
    scale = 1.0 + np.max(np.abs(S))
    asym = np.max(np.abs(S - S.T))
    if asym > tol * scale:
        raise NotSymmetric(f"max |S - S^T| = {asym:.3g} exceeds {tol:.1g} * {scale:.3g}")


def eig_symmetric(S, tol=SYMMETRY_TOL):
    """Eigenvalues of a symmetric matrix, ascending (cyclic Jacobi)."""
    S = as_matrix(S)
    _check_symmetric(S, tol)
    vals, _ = _impl.jacobi_eigh(sym(S), False)
    return vals


def eigh_symmetric(S, tol=SYMMETRY_TOL):
    """Eigenvalues (ascending) and eigenvectors as columns."""
    S = as_matrix(S)
    _check_symmetric(S, tol)
    return _impl.jacobi_eigh(sym(S), True)


def determinant(M):
    return float(_impl.lu_det(as_matrix(M)))


def quadratic_form(M, w):
    """w^T M w, accumulated row by row in one pass."""
    M = as_matrix(M)
    w = as_vector(w)
    if M.shape[0] != w.size:
        raise DimensionMismatch(f"matrix is {M.shape}, vector has {w.size} entries")
    return float(_impl.quad_form(M, w))


def kernel_max_eig(G, J, tol):
    """Batched largest eigenvalue of sym(J[i]) on the kernel of G[i].

    ``G`` is ``(m, n)``, ``J`` is ``(m, n, n)``. Rows with ``|G[i]| <= tol``
    use the whole space instead of the kernel.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    J = np.ascontiguousarray(J, dtype=np.float64)
    if G.ndim != 2 or J.shape != G.shape + (G.shape[1],):
        raise DimensionMismatch(f"G {G.shape} and J {J.shape} do not match")
    return _impl.kernel_max_eig_batch(G, J, float(tol))

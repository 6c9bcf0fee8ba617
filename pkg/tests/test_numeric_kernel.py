import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qcert import _pykernel, numeric_kernel as nk
from qcert.errors import DimensionMismatch, NotSymmetric, ZeroVector


def cofactor_det(M):
    """Laplace expansion along the first row; independent of the LU path."""
    M = [list(map(float, row)) for row in M]
    n = len(M)
    if n == 1:
        return M[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * M[0][j] * cofactor_det(minor)
    return total


def up_to_sign(a, b, tol=1e-12):
    a, b = np.asarray(a), np.asarray(b)
    return np.allclose(a, b, atol=tol) or np.allclose(a, -b, atol=tol)


class TestKernelBasis:
    def test_diagonal_vector(self, backend):
        B = nk.kernel_basis([4.0, 4.0], 1e-12)
        assert B.shape == (1, 2)
        assert up_to_sign(B[0], [1 / math.sqrt(2), -1 / math.sqrt(2)])

    def test_axis_vector(self, backend):
        B = nk.kernel_basis([4.0, 0.0])
        assert up_to_sign(B[0], [0.0, 1.0])

    def test_three_dims(self, backend):
        B = nk.kernel_basis([1.0, 0.0, 0.0])
        assert B.shape == (2, 3)
        np.testing.assert_allclose(B @ B.T, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(B @ [1.0, 0.0, 0.0], 0.0, atol=1e-15)

    def test_zero_vector(self, backend):
        with pytest.raises(ZeroVector):
            nk.kernel_basis([0.0, 1e-14], 1e-12)

    def test_deterministic(self, backend, rng):
        v = rng.normal(size=5)
        assert np.array_equal(nk.kernel_basis(v), nk.kernel_basis(v.copy()))

    @pytest.mark.parametrize("n", range(2, 9))
    def test_random_orthonormal(self, backend, rng, n):
        for _ in range(1000 // 7 + 1):
            v = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
            B = nk.kernel_basis(v)
            full = np.vstack([v / np.linalg.norm(v), B])
            G = B @ B.T
            assert np.max(np.abs(G - np.eye(n - 1))) <= 1e-12
            assert np.max(np.abs(B @ v)) <= 1e-10 * np.linalg.norm(v)
            assert np.max(np.abs(full @ full.T - np.eye(n))) <= 1e-10


class TestEigSymmetric:
    def test_katzner_hessian(self, backend):
        # lambda^2 - 12 lambda = 0
        np.testing.assert_allclose(nk.eig_symmetric([[6, 6], [6, 6]]), [0.0, 12.0], atol=1e-12)

    def test_identity(self, backend):
        np.testing.assert_array_equal(nk.eig_symmetric(np.eye(2)), [1.0, 1.0])

    def test_zero(self, backend):
        np.testing.assert_array_equal(nk.eig_symmetric(np.zeros((2, 2))), [0.0, 0.0])

    def test_not_symmetric(self, backend):
        with pytest.raises(NotSymmetric):
            nk.eig_symmetric([[1.0, 2.0], [0.0, 1.0]])

    def test_small_asymmetry_tolerated(self, backend):
        vals = nk.eig_symmetric([[1.0, 1e-10], [0.0, 1.0]])
        np.testing.assert_allclose(vals, [1.0, 1.0], atol=1e-9)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            nk.eig_symmetric(np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            nk.eig_symmetric([[np.nan, 0], [0, 1]])

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
    def test_reconstruction_trace_det(self, backend, rng, n):
        for _ in range(30):
            A = rng.uniform(-5, 5, size=(n, n))
            S = 0.5 * (A + A.T)
            scale = 1.0 + np.max(np.abs(S))
            vals, V = nk.eigh_symmetric(S)
            assert np.all(np.diff(vals) >= 0)
            recon = V @ np.diag(vals) @ V.T
            assert np.max(np.abs(recon - S)) <= 1e-10 * scale
            assert abs(vals.sum() - np.trace(S)) <= 1e-9 * scale
            assert abs(np.prod(vals) - nk.determinant(S)) <= 1e-9 * scale ** n

    def test_matches_lapack(self, backend, rng):
        for n in range(2, 9):
            A = rng.normal(size=(n, n))
            S = A + A.T
            np.testing.assert_allclose(nk.eig_symmetric(S), np.linalg.eigvalsh(S), atol=1e-11)


class TestDeterminant:
    def test_cofactor_example(self, backend):
        M = [[-2, 0, 1], [0, -2, 0], [1, 0, 0]]
        assert cofactor_det(M) == 2.0
        assert nk.determinant(M) == pytest.approx(2.0, abs=1e-14)

    def test_repeated_rows(self, backend):
        assert nk.determinant([[6, 6, 4], [6, 6, 4], [4, 4, 0]]) == pytest.approx(0.0, abs=1e-12)

    def test_identity(self, backend):
        assert nk.determinant(np.eye(4)) == 1.0

    def test_integer_signs(self, backend, rng):
        for n in range(1, 9):
            for _ in range(20):
                M = rng.integers(-3, 4, size=(n, n)).astype(float)
                exact = round(cofactor_det(M)) if n <= 6 else round(np.linalg.det(M))
                got = nk.determinant(M)
                assert np.sign(round(got)) == np.sign(exact)
                assert got == pytest.approx(exact, abs=1e-8 * max(1.0, abs(exact)))

    def test_elementary_products(self, backend, rng):
        for _ in range(200):
            n = int(rng.integers(2, 9))
            M = np.eye(n)
            tracked = 1.0
            for _ in range(12):
                kind = rng.integers(3)
                i, j = rng.choice(n, size=2, replace=False)
                E = np.eye(n)
                if kind == 0:
                    E[[i, j]] = E[[j, i]]
                    tracked = -tracked
                elif kind == 1:
                    s = rng.uniform(0.5, 2.0) * rng.choice([-1, 1])
                    E[i, i] = s
                    tracked *= s
                else:
                    E[i, j] = rng.uniform(-3, 3)
                M = E @ M
            assert nk.determinant(M) == pytest.approx(tracked, rel=1e-9)


class TestQuadraticForm:
    def test_katzner_kernel_direction(self, backend):
        assert nk.quadratic_form([[6, 6], [6, 6]], [1, -1]) == 0.0

    def test_quartic_hessian(self, backend):
        assert nk.quadratic_form([[12, 0], [0, 0]], [0, 1]) == 0.0

    def test_identity(self, backend):
        assert nk.quadratic_form(np.eye(2), [3, 4]) == 25.0

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            nk.quadratic_form(np.eye(2), [1.0, 2.0, 3.0])

    def test_symmetric_part(self, backend, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            M = rng.uniform(-10, 10, size=(n, n))
            w = rng.uniform(-10, 10, size=n)
            a = nk.quadratic_form(M, w)
            b = nk.quadratic_form(nk.sym(M), w)
            assert abs(a - b) <= 1e-12 * np.max(np.abs(M)) * (w @ w) * n


def test_backends_agree(rng):
    backends = nk.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled kernel not built")
    c, p = backends["cython"], backends["python"]
    for n in range(1, 8):
        G = rng.normal(size=(40, n))
        G[::7] = 0.0
        J = rng.normal(size=(40, n, n))
        np.testing.assert_array_equal(c.kernel_max_eig_batch(G, J, 1e-8), p.kernel_max_eig_batch(G, J, 1e-8))
        S = J[0] + J[0].T
        np.testing.assert_array_equal(c.jacobi_eigh(S)[0], p.jacobi_eigh(S)[0])
        assert c.lu_det(J[1]) == p.lu_det(J[1])


def test_kernel_max_eig_matches_projection(backend, rng):
    for n in range(2, 7):
        G = rng.normal(size=(25, n))
        J = rng.normal(size=(25, n, n))
        got = nk.kernel_max_eig(G, J, 1e-8)
        for i in range(25):
            B = nk.kernel_basis(G[i])
            K = B @ nk.sym(J[i]) @ B.T
            assert got[i] == pytest.approx(np.linalg.eigvalsh(K).max(), abs=1e-11)


def test_kernel_max_eig_full_space_when_vanishing(backend):
    J = np.array([[[-2.0, 0.0], [0.0, -3.0]]])
    assert nk.kernel_max_eig(np.zeros((1, 2)), J, 1e-8)[0] == pytest.approx(-2.0)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 6), elements=st.floats(-1e3, 1e3)))
def test_kernel_basis_property(v):
    if np.linalg.norm(v) <= 1e-6:
        return
    B = nk.kernel_basis(v)
    assert np.max(np.abs(B @ v)) <= 1e-10 * np.linalg.norm(v)
    np.testing.assert_allclose(B @ B.T, np.eye(v.size - 1), atol=1e-12)


def test_pure_python_jacobi_handles_huge_ratio():
    vals, _ = _pykernel.jacobi_eigh(np.array([[1e200, 1e-200], [1e-200, -1e200]]))
    assert vals[0] == -1e200 and vals[1] == 1e200


def test_read_only_inputs(backend):
    G = np.broadcast_to([1.0, 2.0], (3, 2))
    J = np.broadcast_to(-np.eye(2), (3, 2, 2))
    np.testing.assert_allclose(nk.kernel_max_eig(G, J, 1e-8), -1.0)
    v = np.array([3.0, 4.0])
    v.flags.writeable = False
    assert nk.kernel_basis(v).shape == (1, 2)


def _backend_in_subprocess(env_extra, prelude=""):
    import os
    import subprocess
    import sys

    code = prelude + "from qcert import numeric_kernel as nk; print(nk.BACKEND)"
    env = {**os.environ, **env_extra}
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)


def test_env_selects_python():
    assert _backend_in_subprocess({"QCERT_KERNEL": "python"}).stdout.strip() == "python"


def test_fallback_when_extension_missing():
    # block the compiled module at import time, as on a machine without a compiler
    prelude = "import sys; sys.modules['qcert._ckernel'] = None\n"
    out = _backend_in_subprocess({"QCERT_KERNEL": ""}, prelude)
    assert out.stdout.strip() == "python"


def test_unknown_backend_rejected():
    out = _backend_in_subprocess({"QCERT_KERNEL": "fortran"})
    assert out.returncode != 0 and "fortran" in out.stderr

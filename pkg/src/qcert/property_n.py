"""Bordered-determinant test (Property N) for a form restricted to a hyperplane.

For a symmetric ``A`` and a border vector ``b`` with some nonzero entry,
``w^T A w <= 0`` on ``{w : <w, b> = 0}`` iff every bordered principal minor

    (-1)^j det [[A_SS, b_S], [b_S^T, 0]],   |S| = j, 2 <= j <= n,

is non-negative. The bordered determinant is unchanged by a simultaneous
permutation of rows and columns, so every ordering of a subset gives the
same value and only subsets are enumerated.

Indices are 0-based throughout.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from qcert import numeric_kernel as nk
from qcert.certifier import theorem1_point
from qcert.errors import BadIndices, DegenerateBorder, DimensionMismatch, NotSymmetric, PreconditionFailed
from qcert.function_model import GENERATOR
from qcert.report import CertReport, Verdict

MAX_DIM = 12
DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BorderedForm:
    A: np.ndarray
    b: np.ndarray
    symmetric: bool = True

    def __post_init__(self):
        A = nk.as_matrix(self.A)
        b = nk.as_vector(self.b)
        if A.shape[0] != b.size:
            raise DimensionMismatch(f"A is {A.shape}, b has {b.size} entries")
        if self.symmetric and np.max(np.abs(A - A.T)) > nk.SYMMETRY_TOL * (1.0 + np.max(np.abs(A))):
            raise NotSymmetric("A is flagged symmetric but is not")
        if not np.any(b != 0):
            raise DegenerateBorder("border vector is identically zero")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.b.size


def bordered_matrix(form: BorderedForm, indices):
    idx = list(indices)
    j = len(idx)
    M = np.zeros((j + 1, j + 1))
    M[:j, :j] = form.A[np.ix_(idx, idx)]
    M[:j, j] = form.b[idx]
    M[j, :j] = form.b[idx]
    return M


def bordered_minor(form: BorderedForm, indices) -> float:
    """(-1)^j times the bordered determinant on the given index list."""
    idx = [int(i) for i in indices]
    if len(idx) < 2:
        raise BadIndices("need at least two indices")
    if len(set(idx)) != len(idx):
        raise BadIndices(f"repeated index in {idx}")
    if min(idx) < 0 or max(idx) >= form.n:
        raise BadIndices(f"indices {idx} out of range 0..{form.n - 1}")
    sign = 1.0 if len(idx) % 2 == 0 else -1.0
    return sign * nk.determinant(bordered_matrix(form, idx))


def _subsets(n):
    for j in range(2, n + 1):
        yield from itertools.combinations(range(n), j)


def property_n_check(form: BorderedForm, tol=DEFAULT_TOL) -> CertReport:
    """Check every bordered principal minor is >= -tol.

    Minors with ``|minor| <= tol`` are listed as boundary cases in the
    metadata; they do not refute.
    """
    if form.n > MAX_DIM:
        raise ValueError(f"subset enumeration is limited to n <= {MAX_DIM}")
    if np.max(np.abs(form.b)) <= tol:
        raise DegenerateBorder(f"max |b_i| = {np.max(np.abs(form.b)):.3g} <= tol")
    minors = []
    witnesses = []
    boundary = []
    for subset in _subsets(form.n):
        value = bordered_minor(form, subset)
        minors.append(value)
        if value < -tol:
            witnesses.append({"subset": list(subset), "minor": value})
        elif abs(value) <= tol:
            boundary.append(list(subset))
    return CertReport(
        mode="property_n",
        verdict=Verdict.REFUTED if witnesses else Verdict.CERTIFIED,
        witnesses=witnesses,
        tolerances={"tol": tol},
        metadata={
            "n": form.n,
            "subsets": len(minors),
            "min_minor": float(min(minors)) if minors else None,
            "boundary_subsets": boundary,
            "symmetric": form.symmetric,
            "fd_used": {},
            "generator": None,
        },
    )


def conjecture_mode(pair, domain, grid, tol=1e-8) -> CertReport:
    """EXPERIMENTAL: Property N on (Dg(x), g(x)) without symmetrising, next to the kernel test.

    The verdict states only whether Property N held at every grid point.
    Whether that is equivalent to quasi-concavity for nonsymmetric Dg is an
    open question; the agreement table is data, not a claim.
    """
    points = domain.grid_points(grid)
    G = np.asarray(pair.g(points), dtype=float).reshape(len(points), pair.dim)
    bad_g1 = np.flatnonzero(np.abs(G[:, 0]) <= tol)
    if bad_g1.size:
        raise PreconditionFailed(f"|g_1(x)| <= tol at x = {points[bad_g1[0]].tolist()}")
    J = pair.jacobian(points).reshape(len(points), pair.dim, pair.dim)
    rows = []
    witnesses = []
    asymmetric = 0
    for i, x in enumerate(points):
        form = BorderedForm(J[i], G[i], symmetric=False)
        if np.max(np.abs(J[i] - J[i].T)) > nk.SYMMETRY_TOL * (1.0 + np.max(np.abs(J[i]))):
            asymmetric += 1
        pn = property_n_check(form, tol)
        margin = theorem1_point(pair, x, tol)
        pn_ok = pn.verdict is Verdict.CERTIFIED
        t1_ok = margin.max_kernel_eig <= tol
        rows.append(
            {
                "x": x,
                "property_n": pn_ok,
                "min_minor": pn.metadata["min_minor"],
                "theorem1": t1_ok,
                "max_kernel_eig": margin.max_kernel_eig,
                "agree": pn_ok == t1_ok,
            }
        )
        if not pn_ok and not witnesses:
            witnesses.append({"index": i, "x": x, **pn.witnesses[0]})
    agree = sum(r["agree"] for r in rows)
    return CertReport(
        mode="property_n",
        verdict=Verdict.REFUTED if witnesses else Verdict.CERTIFIED,
        witnesses=witnesses,
        tolerances={"tol": tol},
        grid={**grid.to_dict(), "points": int(len(points)), "domain": domain.to_dict()},
        metadata={
            "experimental": True,
            "asymmetric_points": asymmetric,
            "agreement": agree,
            "disagreement": len(rows) - agree,
            "property_n_pass": sum(r["property_n"] for r in rows),
            "theorem1_pass": sum(r["theorem1"] for r in rows),
            "table": rows,
            "fd_used": dict(pair.fd_flags),
            "generator": GENERATOR if grid.random_points else None,
        },
    )

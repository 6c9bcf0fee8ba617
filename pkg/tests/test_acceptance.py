"""Acceptance criteria, one test each, at the stated tolerances.

A PASS/FAIL line per criterion is printed in the pytest terminal summary
(see conftest.py). Run alone with ``pytest tests/test_acceptance.py``.
"""
import math

import numpy as np
import pytest

from qcert import numeric_kernel as nk
from qcert.certifier import certify_theorem1, certify_theorem2, theorem1_point
from qcert.corpus import builtin_corpus, debreu_lambda, get_entry, neg_sq_linear
from qcert.errors import VanishingGradient
from qcert.function_model import (
    BoxDomain,
    C1StarPair,
    GridSpec,
    ScalarField,
    fd_gradient,
    fd_jacobian,
    make_rng,
    one_sided_derivative,
    validate_pair,
)
from qcert.level_tracer import convexity_probe, level_consistency, trace_level
from qcert.oracle import quasiconcavity_oracle, strict_quasiconcavity_oracle
from qcert.property_n import BorderedForm, property_n_check
from qcert.report import Verdict

criterion = pytest.mark.criterion


@criterion(1, "Katzner Df(1,1)=(4,4), D2f(1,1)=[[6,6],[6,6]] analytic and FD; form at (1,-1) is 0")
def test_c1_katzner_values():
    f = get_entry("katzner").f
    x = np.array([1.0, 1.0])
    np.testing.assert_allclose(f.grad(x), [4.0, 4.0], atol=1e-6)
    np.testing.assert_allclose(fd_gradient(ScalarField(2, f.func), x), [4.0, 4.0], atol=1e-6)
    H = [[6.0, 6.0], [6.0, 6.0]]
    np.testing.assert_allclose(f.hess(x), H, atol=1e-6)
    np.testing.assert_allclose(fd_jacobian(f.grad, x), H, atol=1e-6)
    assert abs(nk.quadratic_form(f.hess(x), [1.0, -1.0])) <= 1e-9


@criterion(2, "Katzner: theorem2 undetermined with zero margin at (1,1); strict oracle clean at 1e4 trials")
def test_c2_converse_gap():
    e = get_entry("katzner")
    box = BoxDomain.cube(0.5, 1.5, 2)
    rep = certify_theorem2(e.pair, box, GridSpec(21))
    assert rep.verdict is Verdict.UNDETERMINED
    centre = [m for m in rep.margins if np.max(np.abs(m.x - 1.0)) <= 1e-12]
    assert len(centre) == 1 and abs(centre[0].max_kernel_eig) <= 1e-9
    assert strict_quasiconcavity_oracle(e.f, box, trials=10_000, seed=0).verdict is Verdict.NO_VIOLATION


@criterion(3, "x1^4: theorem1 precondition_failed; oracle witness with gap >= 0.5 within 1e3 trials")
def test_c3_precondition_counterexample():
    e = get_entry("quartic_x1")
    box = BoxDomain.cube(-1, 1, 2)
    assert certify_theorem1(e.pair, box, GridSpec(21)).verdict is Verdict.PRECONDITION_FAILED
    rep = quasiconcavity_oracle(e.f, box, trials=1000, seed=0)
    assert rep.verdict is Verdict.REFUTED
    assert max(w["gap"] for w in rep.witnesses) >= 0.5


@criterion(4, "Debreu: residual <= 1e-6, theorem1 certified, oracle clean at 1e5, margin at (0,1) = -sqrt(2)/2")
def test_c4_debreu_end_to_end():
    e = get_entry("debreu_f")
    box = BoxDomain.cube(-0.5, 0.5, 2)
    grid = GridSpec(21)
    check = validate_pair(e.f, e.pair, box, grid)
    assert check.verdict is Verdict.CERTIFIED and check.metadata["max_residual"] <= 1e-6
    rep = certify_theorem1(e.pair, box, grid)
    assert rep.verdict is Verdict.CERTIFIED and rep.metadata["max_margin"] <= 0
    assert quasiconcavity_oracle(e.f, box, trials=100_000, seed=0).verdict is Verdict.NO_VIOLATION
    assert theorem1_point(e.pair, [0.0, 1.0]).max_kernel_eig == pytest.approx(-math.sqrt(2) / 2, abs=1e-6)


@criterion(5, "Debreu lambda: one-sided d/dx2 at (x1,0) is 2 x1 from above and 0 from below")
def test_c5_lambda_kink():
    e2 = np.array([0.0, 1.0])
    for x1 in (0.25, 0.5, 0.75):
        x = np.array([x1, 0.0])
        assert abs(one_sided_derivative(debreu_lambda, x, e2, "+") - 2 * x1) <= 1e-4
        assert abs(one_sided_derivative(debreu_lambda, x, e2, "-")) <= 1e-4


@criterion(6, "Property N agrees with the kernel eigenvalue test on 1000 random symmetric instances")
def test_c6_property_n_equivalence():
    rng = make_rng(6)
    tol = 1e-9
    disagreements = compared = 0
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        M = rng.uniform(-1, 1, size=(n, n))
        A = (M + M.T) / 2
        b = rng.uniform(-1, 1, size=n)
        B = nk.kernel_basis(b)
        eig = np.linalg.eigvalsh(B @ A @ B.T).max()
        rep = property_n_check(BorderedForm(A, b), tol)
        if abs(eig) <= tol or rep.metadata["boundary_subsets"]:
            continue
        compared += 1
        disagreements += (rep.verdict is Verdict.CERTIFIED) != (eig <= tol)
    assert compared >= 900
    assert disagreements == 0


@criterion(7, "theorem1 vs oracle concordance across the corpus (1e5 trials)")
def test_c7_concordance():
    entries = builtin_corpus()
    assert len(entries) >= 9
    verdicts = {}
    for e in entries:
        t1 = certify_theorem1(e.pair, e.domain, GridSpec(21))
        orc = quasiconcavity_oracle(e.f, e.domain, trials=100_000, seed=7)
        verdicts[e.name] = (t1.verdict, orc.verdict)
        if t1.verdict is Verdict.CERTIFIED:
            assert orc.verdict is Verdict.NO_VIOLATION, e.name
        if t1.verdict is Verdict.REFUTED:
            assert orc.verdict is Verdict.REFUTED, e.name
    assert any(t is Verdict.REFUTED for t, _ in verdicts.values())
    assert any(t is Verdict.CERTIFIED for t, _ in verdicts.values())


@criterion(8, "level tracer: Debreu closed form within 1e-6 at step 1e-3; RK4 step-halving >= 8x; Katzner convex")
def test_c8_level_tracer():
    pair = get_entry("debreu_f").pair
    tr = trace_level(pair, 0.5, (0.0, 0.4), 1e-3)
    assert np.max(np.abs(tr.x2 - 0.5 / (1 + 0.5 * tr.x1))) <= 1e-6
    # at step 1e-3 the error is already at round-off, so the order is measured where truncation dominates
    errs = [np.max(np.abs(t.x2 - 0.5 / (1 + 0.5 * t.x1))) for t in (trace_level(pair, 0.5, (0.0, 0.4), h) for h in (0.1, 0.05))]
    assert errs[0] / errs[1] >= 8
    k = get_entry("katzner")
    ktr = trace_level(k.pair, 1.0, (0.8, 1.2), 1e-3, x1_start=1.0)
    assert level_consistency(ktr, k.f) <= 1e-6
    assert convexity_probe(ktr) > 0


def _decision(pair, x, tol):
    try:
        return theorem1_point(pair, x, tol).max_kernel_eig <= tol
    except VanishingGradient:
        return None


@criterion(9, "theorem1_point decisions invariant under (g, lambda) -> (c g, lambda / c), c in {0.5, 2, 10}")
def test_c9_scale_invariance():
    tol = 1e-8
    for e in builtin_corpus():
        pts = e.domain.sample(make_rng(9), 100)
        base = [_decision(e.pair, x, tol) for x in pts]
        for c in (0.5, 2.0, 10.0):
            scaled = e.pair.scaled(c)
            assert [_decision(scaled, x, tol) for x in pts] == base, (e.name, c)


@criterion(10, "-|x|^2 + <a,x> certified by theorem1 and theorem2 on [-1,1]^n for n = 2..8")
def test_c10_dimension_sweep():
    for n in range(2, 9):
        a = np.zeros(n)
        a[0] = 3.0
        f = neg_sq_linear(n, a)
        pair = C1StarPair.from_gradient(f)
        box = BoxDomain.cube(-1, 1, n)
        grid = GridSpec(max(3, min(21, round(4000 ** (1 / n)))))
        assert validate_pair(f, pair, box, grid).verdict is Verdict.CERTIFIED
        assert certify_theorem1(pair, box, grid).verdict is Verdict.CERTIFIED, n
        assert certify_theorem2(pair, box, grid).verdict is Verdict.CERTIFIED, n

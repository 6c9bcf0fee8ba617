import csv
import io

import numpy as np
import pytest

from qcert.corpus import get_entry
from qcert.errors import DegenerateSlope, DimensionMismatch, DomainViolation
from qcert.function_model import BoxDomain, C1StarPair, ScalarField
from qcert.level_tracer import (
    convexity_probe,
    level_consistency,
    second_differences,
    trace_csv,
    trace_level,
)

DEBREU = get_entry("debreu_f")
KATZ = get_entry("katzner")


def closed_form(c, x1):
    return c / (1 + c * x1)


def katzner_trace(step=1e-3):
    return trace_level(KATZ.pair, 1.0, (0.8, 1.2), step, x1_start=1.0)


class TestDebreu:
    @pytest.mark.parametrize("c", [0.1, 0.3, 0.5])
    def test_closed_form(self, c):
        tr = trace_level(DEBREU.pair, c, (0.0, 0.4), 1e-3)
        assert len(tr) == 401
        np.testing.assert_allclose(tr.x2, closed_form(c, tr.x1), atol=1e-6)

    def test_value_at_point_one(self):
        tr = trace_level(DEBREU.pair, 0.5, (0.0, 0.4), 1e-3)
        i = int(np.argmin(np.abs(tr.x1 - 0.1)))
        assert tr.x2[i] == pytest.approx(0.476190, abs=1e-6)

    def test_flat_branch(self):
        tr = trace_level(DEBREU.pair, -0.3, (-0.4, 0.4), 1e-3)
        assert np.all(tr.x2 == -0.3)

    def test_level_consistency(self):
        tr = trace_level(DEBREU.pair, 0.5, (0.0, 0.4), 1e-3)
        assert level_consistency(tr, DEBREU.f) <= 1e-6


class TestKatzner:
    def test_stays_on_level(self):
        tr = katzner_trace()
        assert float(KATZ.f(tr.start)) == 2.0
        assert level_consistency(tr, KATZ.f) <= 1e-6

    def test_strictly_convex(self):
        assert convexity_probe(katzner_trace()) > 0

    def test_perturbed_trace_detected(self):
        tr = katzner_trace()
        bent = type(tr)(tr.samples + [0.0, 0.01], tr.c, tr.step, start_index=tr.start_index)
        # a uniform shift keeps every sample off the level by the same order
        values = KATZ.f(bent.samples)
        assert np.max(np.abs(values - 2.0)) > 1e-3

    def test_grid_invariants(self):
        tr = katzner_trace()
        np.testing.assert_allclose(np.diff(tr.x1), 1e-3, rtol=1e-9)
        assert np.all(KATZ.domain.contains(tr.samples))
        assert tr.method == "RK4"


class TestOrder:
    @pytest.mark.parametrize("entry, c, rng, start", [(DEBREU, 0.5, (0.0, 0.4), 0.0), (KATZ, 1.0, (0.8, 1.2), 1.0)])
    def test_step_halving(self, entry, c, rng, start):
        errs = [level_consistency(trace_level(entry.pair, c, rng, h, x1_start=start), entry.f) for h in (0.1, 0.05)]
        assert errs[0] / errs[1] >= 8

    def test_reversible(self):
        fwd = trace_level(KATZ.pair, 1.0, (1.0, 1.2), 1e-3, x1_start=1.0)
        end = fwd.samples[-1]
        back = trace_level(KATZ.pair, end[1], (1.0, end[0]), 1e-3, x1_start=end[0])
        assert back.samples[0] == pytest.approx([1.0, 1.0], abs=1e-6)


class TestProbe:
    def test_linear_level_lines(self):
        f = ScalarField(2, lambda x: x[..., 0] + x[..., 1])
        pair = C1StarPair(2, lambda x: np.ones(np.shape(x)))
        tr = trace_level(pair, 0.3, (-0.5, 0.5), 1e-2)
        assert np.max(np.abs(second_differences(tr))) <= 1e-10
        assert level_consistency(tr, f) <= 1e-12

    def test_circle_arc_lower_half(self):
        # level curves of -|x|^2 bend upward (positive second difference) below the x1 axis
        neg = get_entry("neg_sq")
        tr = trace_level(neg.pair, -0.8, (-0.3, 0.3), 1e-3)
        assert convexity_probe(tr) > 0

    def test_circle_arc_upper_half(self):
        neg = get_entry("neg_sq")
        tr = trace_level(neg.pair, 0.8, (-0.3, 0.3), 1e-3)
        assert convexity_probe(tr) < 0

    def test_constant_consistency(self):
        tr = katzner_trace(0.1)
        assert level_consistency(tr, lambda x: np.full(np.shape(x)[:-1], 3.0)) == 0.0

    def test_too_short(self):
        tr = trace_level(DEBREU.pair, 0.5, (0.0, 0.001), 1e-3)
        with pytest.raises(ValueError):
            convexity_probe(tr)


class TestBoundaries:
    def test_truncated_at_box(self):
        box = BoxDomain.cube(-0.5, 0.5, 2)
        tr = trace_level(DEBREU.pair, 0.45, (-0.5, 0.5), 1e-3, domain=box)
        assert np.all(box.contains(tr.samples))
        assert tr.x1[0] > -0.5 + 1e-3

    def test_start_outside(self):
        with pytest.raises(DomainViolation):
            trace_level(DEBREU.pair, 0.9, (0.0, 0.4), domain=BoxDomain.cube(-0.5, 0.5, 2))

    def test_degenerate_slope(self):
        # g2 vanishes on the line x1 = 0.5, which the RK4 grid hits exactly
        pair = C1StarPair(2, lambda x: np.stack([np.zeros(np.shape(x)[:-1]), x[..., 0] - 0.5], -1))
        with pytest.raises(DegenerateSlope):
            trace_level(pair, 0.0, (0.0, 1.0), 1 / 64)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            trace_level(C1StarPair(3, lambda x: x), 0.0, (0.0, 1.0))


def test_csv_export():
    tr = katzner_trace(0.1)
    rows = list(csv.reader(io.StringIO(trace_csv(tr, KATZ.f))))
    assert rows[0] == ["x1", "x2", "f"]
    assert len(rows) == len(tr) + 1
    assert rows[3] == ["1", "1", "2"]
    assert all(float(r[2]) == pytest.approx(2.0, abs=1e-6) for r in rows[1:])

"""Level curves in the plane by integrating x2' = -g1/g2 with fixed-step RK4.

A trace starts at ``(x1_start, c)`` and is integrated in both directions
on the uniform grid ``x1_start + k * step``. It stops, without error, at
the edge of the requested x1 range or when the next sample leaves the box.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from qcert.errors import DegenerateSlope, DimensionMismatch, DomainViolation
from qcert.function_model import BoxDomain, C1StarPair

SLOPE_GUARD = 1e-10
DEFAULT_STEP = 1e-3


@dataclass(frozen=True, eq=False)
class Trace:
    samples: np.ndarray
    c: float
    step: float
    method: str = "RK4"
    start_index: int = 0

    @property
    def x1(self):
        return self.samples[:, 0]

    @property
    def x2(self):
        return self.samples[:, 1]

    def __len__(self):
        return len(self.samples)

    @property
    def start(self):
        return self.samples[self.start_index]


def _slope(pair, x1, x2):
    g = np.asarray(pair.g(np.array([x1, x2])), dtype=float)
    if abs(g[1]) <= SLOPE_GUARD:
        raise DegenerateSlope(f"|g2| = {abs(g[1]):.3g} at ({x1:.6g}, {x2:.6g})")
    return -g[0] / g[1]


def _rk4(pair, x1, x2, h):
    k1 = _slope(pair, x1, x2)
    k2 = _slope(pair, x1 + h / 2, x2 + h * k1 / 2)
    k3 = _slope(pair, x1 + h / 2, x2 + h * k2 / 2)
    k4 = _slope(pair, x1 + h, x2 + h * k3)
    return x2 + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _march(pair, x1_start, x2_start, h, stop, domain):
    out = []
    x2 = x2_start
    k = 0
    while True:
        x1_next = x1_start + (k + 1) * h
        if (h > 0 and x1_next > stop + 1e-12 * abs(h)) or (h < 0 and x1_next < stop - 1e-12 * abs(h)):
            break
        x2 = _rk4(pair, x1_start + k * h, x2, h)
        if not np.isfinite(x2):
            break
        point = np.array([x1_next, x2])
        if domain is not None and not domain.contains(point):
            break
        out.append(point)
        k += 1
    return out


def trace_level(
    pair: C1StarPair,
    c,
    x1_range,
    step=DEFAULT_STEP,
    domain: BoxDomain | None = None,
    x1_start=0.0,
) -> Trace:
    """Trace the level curve through ``(x1_start, c)`` over ``x1_range``."""
    if pair.dim != 2:
        raise DimensionMismatch("level tracing is for two variables")
    lo, hi = (float(v) for v in x1_range)
    if not lo <= x1_start <= hi:
        raise ValueError(f"x1_start = {x1_start} is outside [{lo}, {hi}]")
    if not step > 0:
        raise ValueError("step must be positive")
    start = np.array([float(x1_start), float(c)])
    if domain is not None and not domain.contains(start):
        raise DomainViolation(f"start point {start.tolist()} is outside the box")
    _slope(pair, *start)
    back = _march(pair, start[0], start[1], -step, lo, domain)
    fwd = _march(pair, start[0], start[1], step, hi, domain)
    samples = np.array(back[::-1] + [start] + fwd)
    return Trace(samples=samples, c=float(c), step=float(step), start_index=len(back))


def level_consistency(trace: Trace, f) -> float:
    """Largest |f(sample) - f(start)| over the trace."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    values = np.asarray(f(trace.samples), dtype=float)
    return float(np.max(np.abs(values - values[trace.start_index])))


def second_differences(trace: Trace):
    x2 = trace.x2
    return x2[:-2] - 2.0 * x2[1:-1] + x2[2:]


def convexity_probe(trace: Trace) -> float:
    """Smallest second difference of x2 along the trace; > 0 suggests strict convexity."""
    if len(trace) < 3:
        raise ValueError("need at least three samples")
    return float(np.min(second_differences(trace)))


def trace_csv(trace: Trace, f) -> str:
    values = np.asarray(f(trace.samples), dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "f"])
    for (a, b), v in zip(trace.samples, values):
        writer.writerow(["%.12g" % a, "%.12g" % b, "%.12g" % v])
    return buf.getvalue()

"""Scalar fields, C1* decompositions, box domains and finite differences.

All callables here are vectorised over leading axes: a field of dimension
``n`` maps an array of shape ``(..., n)`` to shape ``(...)``, a vector
field maps it to ``(..., n)`` and a Jacobian to ``(..., n, n)`` with
``J[..., i, j] = d g_i / d x_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from qcert.errors import DimensionMismatch, DomainViolation, VanishingGradient
from qcert.report import CertReport, Verdict

FD_STEP = 1e-5
# outer step when differentiating an already finite-differenced gradient
FD_STEP_NESTED = 1e-4
ONE_SIDED_STEP = 2.0 ** -13

GENERATOR = "numpy.random.Philox (Philox4x64-10, counter-based)"


def make_rng(seed):
    """Seeded counter-based generator used for every random draw in qcert."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: int = 21
    rng_seed: int = 0
    random_points: int = 0

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be >= 2")
        if self.random_points < 0 or self.rng_seed < 0:
            raise ValueError("random_points and rng_seed must be non-negative")

    def to_dict(self):
        return {
            "points_per_axis": self.points_per_axis,
            "rng_seed": self.rng_seed,
            "random_points": self.random_points,
        }


@dataclass(frozen=True, eq=False)
class BoxDomain:
    """Open box ``]lower, upper[``; samples stay ``margin`` away from the faces."""

    lower: np.ndarray
    upper: np.ndarray
    margin: Optional[float] = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("lower and upper must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError(f"need lower < upper componentwise, got {lo} and {hi}")
        margin = self.margin
        if margin is None:
            margin = 1e-6 * float(np.linalg.norm(hi - lo))
        if margin <= 0 or np.any(2 * margin >= hi - lo):
            raise ValueError(f"margin {margin} does not fit inside the box")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "margin", float(margin))

    @classmethod
    def cube(cls, lo, hi, dim, margin=None):
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)), margin)

    @classmethod
    def parse(cls, text):
        """Parse ``"x1:-0.5:0.5,x2:-0.5:0.5"``."""
        bounds = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                name, lo, hi = part.split(":")
                idx = int(name.strip().lstrip("x"))
                pair = (float(lo), float(hi))
            except ValueError:
                raise ValueError(f"bad domain component {part!r}; expected xK:lo:hi") from None
            if idx in bounds:
                raise ValueError(f"x{idx} listed twice in {text!r}")
            bounds[idx] = pair
        if not bounds or sorted(bounds) != list(range(1, len(bounds) + 1)):
            raise ValueError(f"domain must list x1..xn exactly once, got {text!r}")
        lo = [bounds[i][0] for i in sorted(bounds)]
        hi = [bounds[i][1] for i in sorted(bounds)]
        return cls(np.array(lo), np.array(hi))

    def format(self):
        return ",".join(f"x{i + 1}:{float(lo)!r}:{float(hi)!r}" for i, (lo, hi) in enumerate(zip(self.lower, self.upper)))

    @property
    def dim(self):
        return self.lower.size

    @property
    def inner_lower(self):
        return self.lower + self.margin

    @property
    def inner_upper(self):
        return self.upper - self.margin

    def contains(self, x, closed=True):
        x = np.asarray(x, dtype=float)
        if closed:
            ok = (x >= self.lower) & (x <= self.upper)
        else:
            ok = (x > self.lower) & (x < self.upper)
        return np.all(ok, axis=-1)

    def sample(self, rng, size):
        u = rng.random((size, self.dim))
        return self.inner_lower + u * (self.inner_upper - self.inner_lower)

    def grid_points(self, grid: GridSpec):
        """Tensor lattice (first axis slowest) followed by seeded uniform points."""
        axes = [np.linspace(a, b, grid.points_per_axis) for a, b in zip(self.inner_lower, self.inner_upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        lattice = np.stack([m.ravel() for m in mesh], axis=-1)
        if grid.random_points:
            extra = self.sample(make_rng(grid.rng_seed), grid.random_points)
            lattice = np.vstack([lattice, extra])
        return lattice

    def to_dict(self):
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist(), "margin": self.margin}


@dataclass(eq=False)
class ScalarField:
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    @property
    def analytic_grad(self):
        return self.grad is not None

    def gradient(self, x, step=FD_STEP):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self, x, step)


def _check_stencil(domain, points):
    if domain is not None and not np.all(domain.contains(points, closed=True)):
        raise DomainViolation("finite-difference stencil leaves the domain box")


def fd_gradient(f, x, step=FD_STEP, domain=None):
    """Central-difference gradient, vectorised over leading axes of ``x``."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    offsets = step * np.eye(x.shape[-1])
    plus = x[..., None, :] + offsets
    minus = x[..., None, :] - offsets
    _check_stencil(domain, plus)
    _check_stencil(domain, minus)
    return (np.asarray(f(plus)) - np.asarray(f(minus))) / (2.0 * step)


def fd_jacobian(g, x, step=FD_STEP, domain=None):
    """Central-difference Jacobian ``J[..., i, j] = d g_i / d x_j``."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    offsets = step * np.eye(x.shape[-1])
    plus = x[..., None, :] + offsets
    minus = x[..., None, :] - offsets
    _check_stencil(domain, plus)
    _check_stencil(domain, minus)
    diff = (np.asarray(g(plus)) - np.asarray(g(minus))) / (2.0 * step)
    return np.swapaxes(diff, -1, -2)


def normalize_gradient(f, x, tol=1e-12):
    """Unit vector along Df(x); fails where the gradient vanishes."""
    d = f.gradient(np.asarray(x, dtype=float))
    norm = float(np.linalg.norm(d))
    if norm <= tol:
        raise VanishingGradient(f"|Df(x)| = {norm:.3g} <= {tol:.3g} at x = {x}")
    return d / norm


def one_sided_derivative(phi, x, direction, side, step=ONE_SIDED_STEP, domain=None):
    """Directional derivative from one side, Richardson-extrapolated.

    Combines the one-sided quotients at ``step`` and ``step/2`` so the
    O(step) error cancels. ``side`` is ``"+"`` or ``"-"``.
    """
    if side in ("+", 1, +1.0):
        s = 1.0
    elif side in ("-", -1, -1.0):
        s = -1.0
    else:
        raise ValueError(f"side must be '+' or '-', got {side!r}")
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    far = x + s * step * d
    _check_stencil(domain, far)
    f0 = float(phi(x))

    def quotient(h):
        return s * (float(phi(x + s * h * d)) - f0) / h

    return 2.0 * quotient(step / 2.0) - quotient(step)


def _ones(x):
    return np.ones(np.shape(x)[:-1])


@dataclass(eq=False)
class C1StarPair:
    """A decomposition Df = lambda * g with lambda > 0."""

    dim: int
    g: Callable[[np.ndarray], np.ndarray]
    lam: Callable[[np.ndarray], np.ndarray] = _ones
    dg: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    fd_step: float = FD_STEP
    fd_flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fd_flags = {"g": False, "dg": self.dg is None, **self.fd_flags}

    @classmethod
    def from_gradient(cls, f: ScalarField):
        """The C2 choice g = Df, lambda = 1."""
        if f.grad is not None:
            g, step = f.grad, FD_STEP
        else:
            g, step = (lambda x: fd_gradient(f, x)), FD_STEP_NESTED
        return cls(dim=f.dim, g=g, dg=f.hess, name=f.name, fd_step=step, fd_flags={"g": f.grad is None})

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.dg is not None:
            return np.asarray(self.dg(x), dtype=float)
        return fd_jacobian(self.g, x, self.fd_step)

    def scaled(self, c):
        """The equivalent pair (c g, lambda / c)."""
        if c <= 0:
            raise ValueError("scale must be positive")
        g, lam, dg = self.g, self.lam, self.dg
        return C1StarPair(
            dim=self.dim,
            g=lambda x: c * np.asarray(g(x)),
            lam=lambda x: np.asarray(lam(x)) / c,
            dg=None if dg is None else (lambda x: c * np.asarray(dg(x))),
            name=self.name,
            fd_step=self.fd_step,
            fd_flags=dict(self.fd_flags),
        )


def validate_pair(f, pair, domain, grid, tol=1e-6, max_witnesses=10):
    """Check Df(x) = lambda(x) g(x) and lambda(x) > 0 on the sample grid."""
    if not (f.dim == pair.dim == domain.dim):
        raise DimensionMismatch(f"dimensions differ: f {f.dim}, pair {pair.dim}, domain {domain.dim}")
    pts = domain.grid_points(grid)
    df = f.gradient(pts)
    lam = np.broadcast_to(np.asarray(pair.lam(pts), dtype=float), pts.shape[:-1])
    g = np.asarray(pair.g(pts), dtype=float)
    resid = np.max(np.abs(df - lam[:, None] * g), axis=-1)
    bad = np.flatnonzero((resid > tol) | ~(lam > 0) | ~np.isfinite(resid))
    witnesses = [
        {"index": int(i), "x": pts[i], "residual": float(resid[i]), "lambda": float(lam[i])}
        for i in bad[:max_witnesses]
    ]
    return CertReport(
        mode="validate",
        verdict=Verdict.REFUTED if bad.size else Verdict.CERTIFIED,
        witnesses=witnesses,
        tolerances={"residual_tol": tol},
        grid={**grid.to_dict(), "points": len(pts), "domain": domain.to_dict()},
        metadata={
            "max_residual": float(np.max(resid)),
            "min_lambda": float(np.min(lam)),
            "failing_points": int(bad.size),
            "fd_used": {"grad": not f.analytic_grad},
            "generator": GENERATOR if grid.random_points else None,
        },
    )

"""Built-in test corpus.

Each entry carries the field, an analytic C1* decomposition, a default
domain and the expected labels (checked against the sampling oracle in the
test suite). The Debreu example is piecewise in x2 and is evaluated by
branch, never through the expression language.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from qcert.function_model import BoxDomain, C1StarPair, ScalarField, make_rng


@dataclass(frozen=True)
class Labels:
    quasiconcave: bool
    strictly: bool
    concave: bool
    df_nonvanishing: bool


@dataclass(eq=False)
class CorpusEntry:
    name: str
    dim: int
    f: ScalarField
    pair: C1StarPair
    domain: BoxDomain
    labels: Labels
    notes: str = ""
    expression: Optional[str] = None


# -- Debreu's C1* field that is not C2 -------------------------------------


def debreu_f(x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    pos = np.where(x2 > 0, x2, 0.0)
    return np.where(x2 > 0, pos / (1.0 - x1 * pos), x2)


def debreu_grad(x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    pos = np.where(x2 > 0, x2, 0.0)
    inv = 1.0 / (1.0 - x1 * pos) ** 2
    return np.stack([pos**2 * inv, np.where(x2 > 0, inv, 1.0)], axis=-1)


def debreu_g(x):
    x = np.asarray(x, dtype=float)
    pos = np.where(x[..., 1] > 0, x[..., 1], 0.0)
    root = np.sqrt(1.0 + pos**4)
    return np.stack([pos**2 / root, 1.0 / root], axis=-1)


def debreu_lambda(x):
    x = np.asarray(x, dtype=float)
    x1 = x[..., 0]
    pos = np.where(x[..., 1] > 0, x[..., 1], 0.0)
    return np.sqrt(1.0 + pos**4) / (1.0 - x1 * pos) ** 2


def debreu_dg(x):
    x = np.asarray(x, dtype=float)
    pos = np.where(x[..., 1] > 0, x[..., 1], 0.0)
    denom = (1.0 + pos**4) ** 1.5
    J = np.zeros(x.shape + (2,))
    J[..., 0, 1] = 2.0 * pos / denom
    J[..., 1, 1] = -2.0 * pos**3 / denom
    return J


# -- smooth closed-form fields ---------------------------------------------


def katzner(x):
    x1, x2 = x[..., 0], x[..., 1]
    return x1**3 * x2 + x1 * x2**3


def katzner_grad(x):
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([3 * x1**2 * x2 + x2**3, x1**3 + 3 * x1 * x2**2], axis=-1)


def katzner_hess(x):
    x1, x2 = x[..., 0], x[..., 1]
    d = 6 * x1 * x2
    off = 3 * x1**2 + 3 * x2**2
    return np.stack([np.stack([d, off], -1), np.stack([off, d], -1)], -2)


def _field(name, dim, f, grad, hess):
    return ScalarField(dim=dim, func=f, grad=grad, hess=hess, name=name)


class Polynomial:
    """c0 + a.x + x^T Q x + sum_i c_i x_i^3 with Q symmetric."""

    def __init__(self, c0, a, Q, cubic):
        self.c0 = float(c0)
        self.a = np.asarray(a, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.cubic = np.asarray(cubic, dtype=float)
        self.dim = self.a.size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c0 + x @ self.a + np.sum((x @ self.Q) * x, axis=-1)
        if np.any(self.cubic):
            out = out + (x**3) @ self.cubic
        return out

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return self.a + 2.0 * x @ self.Q + 3.0 * self.cubic * x**2

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        diag = 6.0 * self.cubic * x
        return 2.0 * self.Q + diag[..., :, None] * np.eye(self.dim)

    def field(self, name):
        return ScalarField(dim=self.dim, func=self, grad=self.grad, hess=self.hess, name=name)


def random_concave_quadratic(seed=11, dim=2):
    """Strictly concave quadratic whose maximiser lies outside [-1, 1]^dim."""
    rng = make_rng(seed)
    M = rng.uniform(-1, 1, size=(dim, dim))
    P = M.T @ M + 0.5 * np.eye(dim)
    center = rng.uniform(-1, 1, size=dim)
    center[0] = 2.5 * np.sign(center[0] or 1.0)
    Q = -P
    a = -2.0 * Q @ center
    return Polynomial(0.0, a, Q, np.zeros(dim))


def random_saddle_cubic(seed=12, dim=2):
    """Cubic with a saddle (indefinite Hessian, zero gradient) at the origin."""
    rng = make_rng(seed)
    R, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    eig = np.ones(dim)
    eig[1::2] = -1.0
    Q = R @ np.diag(eig) @ R.T
    cubic = rng.uniform(-0.2, 0.2, size=dim)
    return Polynomial(0.0, np.zeros(dim), 0.5 * (Q + Q.T), cubic)


def neg_sq_linear(dim, a):
    """-|x|^2 + <a, x>, with g = Df and lambda = 1."""
    a = np.asarray(a, dtype=float)
    poly = Polynomial(0.0, a, -np.eye(dim), np.zeros(dim))
    return poly.field(f"neg_sq_linear_{dim}")


def _entries():
    out = []

    def add(name, f, domain, labels, notes, pair=None, expression=None):
        out.append(
            CorpusEntry(
                name=name,
                dim=f.dim,
                f=f,
                pair=pair if pair is not None else C1StarPair.from_gradient(f),
                domain=domain,
                labels=labels,
                notes=notes,
                expression=expression,
            )
        )

    sq = lambda lo, hi: BoxDomain.cube(lo, hi, 2)  # noqa: E731

    debreu_field = _field("debreu_f", 2, debreu_f, debreu_grad, None)
    add(
        "debreu_f",
        debreu_field,
        sq(-0.5, 0.5),
        Labels(quasiconcave=True, strictly=False, concave=False, df_nonvanishing=True),
        "piecewise C1* field, not C2 across x2 = 0; linear (so not strict) where x2 <= 0",
        pair=C1StarPair(dim=2, g=debreu_g, lam=debreu_lambda, dg=debreu_dg, name="debreu"),
    )
    add(
        "katzner",
        _field("katzner", 2, katzner, katzner_grad, katzner_hess),
        sq(0.5, 1.5),
        Labels(quasiconcave=True, strictly=True, concave=False, df_nonvanishing=True),
        "strictly quasi-concave although the bordered form vanishes along x1 = x2",
        expression="x1^3*x2 + x1*x2^3",
    )
    add(
        "quartic_x1",
        _field(
            "quartic_x1",
            2,
            lambda x: x[..., 0] ** 4,
            lambda x: np.stack([4 * x[..., 0] ** 3, np.zeros_like(x[..., 0])], -1),
            lambda x: np.stack(
                [np.stack([12 * x[..., 0] ** 2, 0 * x[..., 0]], -1), np.zeros(x.shape)], -2
            ),
        ),
        sq(-1.0, 1.0),
        Labels(quasiconcave=False, strictly=False, concave=False, df_nonvanishing=False),
        "kernel form is zero everywhere, yet not quasi-concave: Df vanishes on x1 = 0",
        expression="x1^4",
    )
    add(
        "linear",
        _field(
            "linear",
            2,
            lambda x: x[..., 1],
            lambda x: np.broadcast_to([0.0, 1.0], x.shape).copy(),
            lambda x: np.zeros(x.shape + (2,)),
        ),
        sq(-1.0, 1.0),
        Labels(quasiconcave=True, strictly=False, concave=True, df_nonvanishing=True),
        "linear: quasi-concave and concave, never strict",
        expression="x2",
    )
    neg = Polynomial(0.0, np.zeros(2), -np.eye(2), np.zeros(2))
    add(
        "neg_sq",
        neg.field("neg_sq"),
        sq(-1.0, 1.0),
        Labels(quasiconcave=True, strictly=True, concave=True, df_nonvanishing=False),
        "strictly concave; gradient vanishes at the origin",
        expression="-(x1^2 + x2^2)",
    )
    conv = Polynomial(0.0, np.zeros(2), np.eye(2), np.zeros(2))
    add(
        "convex_sq",
        conv.field("convex_sq"),
        sq(1.0, 2.0),
        Labels(quasiconcave=False, strictly=False, concave=False, df_nonvanishing=True),
        "convex paraboloid off-centre: not quasi-concave",
        expression="x1^2 + x2^2",
    )

    def cd(x):
        return x[..., 0] ** 0.3 * x[..., 1] ** 0.7

    def cd_grad(x):
        v = cd(x)
        return np.stack([0.3 * v / x[..., 0], 0.7 * v / x[..., 1]], -1)

    def cd_hess(x):
        v = cd(x)
        x1, x2 = x[..., 0], x[..., 1]
        h11 = -0.21 * v / x1**2
        h22 = -0.21 * v / x2**2
        h12 = 0.21 * v / (x1 * x2)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    add(
        "cobb_douglas",
        _field("cobb_douglas", 2, cd, cd_grad, cd_hess),
        sq(0.5, 2.0),
        Labels(quasiconcave=True, strictly=True, concave=True, df_nonvanishing=True),
        "homogeneous of degree one: concave, linear along rays",
        expression="x1^0.3 * x2^0.7",
    )
    add(
        "poly_concave",
        random_concave_quadratic().field("poly_concave"),
        sq(-1.0, 1.0),
        Labels(quasiconcave=True, strictly=True, concave=True, df_nonvanishing=True),
        "seeded strictly concave quadratic, maximiser outside the box",
    )
    add(
        "poly_saddle",
        random_saddle_cubic().field("poly_saddle"),
        sq(-1.0, 1.0),
        Labels(quasiconcave=False, strictly=False, concave=False, df_nonvanishing=False),
        "seeded cubic with a saddle at the origin",
    )
    return out


_CORPUS = None


def builtin_corpus():
    global _CORPUS
    if _CORPUS is None:
        _CORPUS = _entries()
    return list(_CORPUS)


def get_entry(name):
    for entry in builtin_corpus():
        if entry.name == name:
            return entry
    raise KeyError(f"no builtin named {name!r}; have {[e.name for e in builtin_corpus()]}")

"""Kernel-restricted quadratic-form tests for quasi-concavity.

For a decomposition Df = lambda * g, the field is quasi-concave on a convex
open set (with Df never zero) exactly when ``<w, Dg(x) w> <= 0`` for every
``w`` orthogonal to ``g(x)``; strict negativity is sufficient for strict
quasi-concavity. Only sym(Dg) matters for the form, so it is symmetrised
before the eigen-analysis.

Grid verdicts hold for the sampled points only; no interval bound is
attempted between them.
"""
from __future__ import annotations

import numpy as np

from qcert import numeric_kernel as nk
from qcert.errors import DimensionMismatch, PreconditionFailed, VanishingGradient
from qcert.function_model import GENERATOR, BoxDomain, C1StarPair, GridSpec, make_rng
from qcert.report import CertReport, PointMargin, Verdict

DEFAULT_TOL = 1e-8
VIOLATION_FACTOR = 10.0
LEMMA1_MIN_RANDOM = 4096


def _require_dim(pair):
    if pair.dim < 2:
        raise DimensionMismatch("the kernel of g(x) is trivial in dimension 1; need dim >= 2")


def _evaluate(pair, points):
    G = np.asarray(pair.g(points), dtype=float).reshape(len(points), pair.dim)
    J = pair.jacobian(points).reshape(len(points), pair.dim, pair.dim)
    return G, J


def kernel_direction(g, dg):
    """Unit vector w orthogonal to g maximising <w, sym(dg) w>, and that value."""
    B = nk.kernel_basis(g)
    K = B @ nk.sym(dg) @ B.T
    vals, vecs = nk.eigh_symmetric(nk.sym(K))
    return B.T @ vecs[:, -1], float(vals[-1])


def theorem1_point(pair: C1StarPair, x, tol=DEFAULT_TOL) -> PointMargin:
    """Largest value of <w, Dg(x) w> over unit w with <w, g(x)> = 0."""
    _require_dim(pair)
    x = np.asarray(x, dtype=float)
    G, J = _evaluate(pair, x[None, :])
    norm = float(np.linalg.norm(G[0]))
    if norm <= tol:
        raise VanishingGradient(f"|g(x)| = {norm:.3g} <= {tol:.3g} at x = {x}")
    eig = float(nk.kernel_max_eig(G, J, tol)[0])
    return PointMargin(x=x, max_kernel_eig=eig, grad_norm=norm)


def _check_lambda(pair, points):
    lam = np.asarray(pair.lam(points), dtype=float)
    bad = np.flatnonzero(~(lam > 0))
    if bad.size:
        i = int(bad[0])
        raise PreconditionFailed(f"lambda(x) = {lam.flat[i]:.3g} is not positive at x = {points[i].tolist()}")


def _base_report(mode, pair, domain, grid, points, tolerances):
    return dict(
        mode=mode,
        tolerances=tolerances,
        grid={
            **grid.to_dict(),
            "points": int(len(points)),
            "domain": domain.to_dict(),
            "quantifier": "sampled grid only",
        },
        metadata={
            "fd_used": dict(pair.fd_flags),
            "generator": GENERATOR if grid.random_points else None,
            "kernel_backend": nk.BACKEND,
        },
    )


def _margins(points, eigs, norms):
    return [PointMargin(x=p, max_kernel_eig=float(e), grad_norm=float(n)) for p, e, n in zip(points, eigs, norms)]


def certify_theorem1(
    pair: C1StarPair,
    domain: BoxDomain,
    grid: GridSpec,
    tol=DEFAULT_TOL,
    violation_factor=VIOLATION_FACTOR,
) -> CertReport:
    """Grid test of the necessary-and-sufficient kernel condition.

    Verdict ladder: precondition_failed if g vanishes (|g| <= tol) at a grid
    point; refuted if some margin exceeds ``violation_factor * tol``;
    certified if every margin is <= tol; undetermined otherwise.
    """
    _require_dim(pair)
    points = domain.grid_points(grid)
    threshold = violation_factor * tol
    base = _base_report(
        "theorem1", pair, domain, grid, points, {"tol": tol, "violation_threshold": threshold}
    )
    _check_lambda(pair, points)

    G, J = _evaluate(pair, points)
    norms = np.linalg.norm(G, axis=1)
    vanish = np.flatnonzero(norms <= tol)
    eigs = nk.kernel_max_eig(G, J, tol)
    margins = _margins(points, eigs, norms)
    if vanish.size:
        rest = np.delete(eigs, vanish)
        base["metadata"]["vanishing_points"] = int(vanish.size)
        base["metadata"]["max_margin_elsewhere"] = float(rest.max()) if rest.size else None
        witnesses = [{"index": int(i), "x": points[i], "grad_norm": float(norms[i])} for i in vanish[:10]]
        return CertReport(verdict=Verdict.PRECONDITION_FAILED, margins=margins, witnesses=witnesses, **base)

    worst = int(np.argmax(eigs))
    base["metadata"]["max_margin"] = float(eigs[worst])
    base["metadata"]["max_margin_at"] = points[worst]
    over = np.flatnonzero(eigs > threshold)
    if over.size:
        i = int(over[0])
        w, value = kernel_direction(G[i], J[i])
        witnesses = [
            {
                "index": i,
                "x": points[i],
                "w": w,
                "form_value": value,
                "g": G[i],
            }
        ]
        base["metadata"]["violating_points"] = int(over.size)
        return CertReport(verdict=Verdict.REFUTED, margins=margins, witnesses=witnesses, **base)
    verdict = Verdict.CERTIFIED if eigs[worst] <= tol else Verdict.UNDETERMINED
    return CertReport(verdict=verdict, margins=margins, **base)


def certify_theorem2(pair: C1StarPair, domain: BoxDomain, grid: GridSpec, tol=DEFAULT_TOL) -> CertReport:
    """Grid test of the sufficient condition for strict quasi-concavity.

    Certified when every margin is <= -tol. The condition is only
    sufficient, so failure gives undetermined, never refuted. Where g(x)
    vanishes the whole space replaces the kernel.
    """
    _require_dim(pair)
    points = domain.grid_points(grid)
    base = _base_report("theorem2", pair, domain, grid, points, {"tol": tol})
    _check_lambda(pair, points)
    G, J = _evaluate(pair, points)
    norms = np.linalg.norm(G, axis=1)
    eigs = nk.kernel_max_eig(G, J, tol)
    worst = int(np.argmax(eigs))
    base["metadata"].update(
        max_margin=float(eigs[worst]),
        max_margin_at=points[worst],
        full_space_points=int(np.count_nonzero(norms <= tol)),
        failing_points=int(np.count_nonzero(eigs > -tol)),
    )
    verdict = Verdict.CERTIFIED if eigs[worst] <= -tol else Verdict.UNDETERMINED
    return CertReport(verdict=verdict, margins=_margins(points, eigs, norms), **base)


def lemma1_check(f, x_star, domain: BoxDomain, grid: GridSpec, tol=DEFAULT_TOL) -> CertReport:
    """Check that x* maximises f on the hyperplane through x* normal to Df(x*).

    The slice is sampled on a lattice in kernel coordinates (spanning the
    box diagonal in each direction) plus ``grid.random_points`` seeded
    points; only samples strictly inside the box are kept.
    """
    x_star = np.asarray(x_star, dtype=float)
    normal = np.asarray(f.gradient(x_star), dtype=float)
    norm = float(np.linalg.norm(normal))
    if norm <= tol:
        raise VanishingGradient(f"|Df(x*)| = {norm:.3g} <= {tol:.3g}")
    B = nk.kernel_basis(normal)
    reach = float(np.linalg.norm(domain.upper - domain.lower))
    k = B.shape[0]
    random_points = grid.random_points
    if k <= 2:
        axis = np.linspace(-reach, reach, 2 * grid.points_per_axis + 1)
        coords = np.stack([m.ravel() for m in np.meshgrid(*([axis] * k), indexing="ij")], -1)
    else:
        # lattices in more than two kernel coordinates are too large
        coords = np.empty((0, k))
        random_points = max(random_points, LEMMA1_MIN_RANDOM)
    if random_points:
        extra = make_rng(grid.rng_seed).uniform(-reach, reach, size=(random_points, k))
        coords = np.vstack([coords, extra])
    samples = x_star + coords @ B
    inside = domain.contains(samples, closed=False)
    samples = samples[inside]
    f_star = float(f(x_star))
    values = np.asarray(f(samples), dtype=float)
    bad = np.flatnonzero(values > f_star + tol)
    report = dict(
        mode="lemma1",
        tolerances={"tol": tol},
        grid={**grid.to_dict(), "points": int(len(samples)), "domain": domain.to_dict()},
        metadata={
            "x_star": x_star,
            "normal": normal,
            "f_star": f_star,
            "max_on_slice": float(values.max()) if values.size else None,
            "fd_used": {"grad": not f.analytic_grad},
            "generator": GENERATOR if random_points else None,
        },
    )
    if bad.size:
        i = int(bad[0])
        witness = {"x": samples[i], "f_x": float(values[i]), "f_star": f_star, "gap": float(values[i] - f_star)}
        return CertReport(verdict=Verdict.REFUTED, witnesses=[witness], **report)
    return CertReport(verdict=Verdict.CERTIFIED, **report)

"""Sampling checks straight from the definitions.

Each trial draws ``x`` uniformly inside the box and pairs it with two
partners: a uniform ``y`` and a point along a random direction tangent to
the level set of f at ``x`` (found by finite differences of f). Flat
pieces of a level set have measure zero under uniform pairs, so the
tangent partner is what exposes non-strictness of e.g. linear functions.
For each pair a random ``t`` is tried, then a fixed 33-point grid on
[0, 1].

Draws come from a seeded Philox stream, one row of ``3n + 2`` uniforms
per trial, so the first ``T`` trials are the same whatever the total: a
witness found with ``T`` trials is found again with more. The first
witness reported has the smallest trial index (random partner before
tangent partner, random ``t`` before the grid); the largest-gap witness
is reported too when it differs.
"""
from __future__ import annotations

import numpy as np

from qcert import numeric_kernel as nk
from qcert.function_model import GENERATOR, BoxDomain, GridSpec, make_rng
from qcert.report import CertReport, Verdict

T_GRID = np.linspace(0.0, 1.0, 33)
STRICT_BAND = 1e-10
STRICT_MIN_DISTANCE = 1e-6
# tangent steps shorter than this fraction of the box diagonal are dropped:
# near-flat level curves would otherwise fall inside the equality band
TANGENT_MIN_STEP = 0.05
CHUNK = 4096


def ROW_WIDTH(n):
    # x, y, t for the random partner; direction and length for the tangent partner
    return 3 * n + 2


def _witness(trial, partner, x, y, t, z, fx, fy, lhs, rhs):
    return {
        "trial": int(trial),
        "partner": partner,
        "x": x,
        "y": y,
        "t": float(t),
        "z": z,
        "fx": float(fx),
        "fy": float(fy),
        "lhs": float(lhs),
        "rhs": float(rhs),
        "gap": float(rhs - lhs),
    }


def _clipped_gradient(f, x, lo, hi, step=1e-5):
    # central differences with the stencil clipped into the box
    n = x.shape[-1]
    plus = np.minimum(x[:, None, :] + step * np.eye(n), hi)
    minus = np.maximum(x[:, None, :] - step * np.eye(n), lo)
    sep = np.diagonal(plus - minus, axis1=1, axis2=2)
    return (np.asarray(f(plus)) - np.asarray(f(minus))) / sep


def _tangent_partner(f, x, u_dir, u_len, lo, hi):
    """A point x + s w with w a random unit vector orthogonal to grad f(x).

    The sign of w is chosen to give the longer feasible step; ``s`` is a
    fraction in [0.1, 1] of that step. Rows where no usable direction
    exists are flagged invalid.
    """
    grad = _clipped_gradient(f, x, lo, hi)
    r = 2.0 * u_dir - 1.0
    gn2 = np.einsum("ij,ij->i", grad, grad)
    safe = np.where(gn2 > 0, gn2, 1.0)
    w = r - (np.einsum("ij,ij->i", r, grad) / safe)[:, None] * grad
    wn = np.linalg.norm(w, axis=1)
    valid = (gn2 > 1e-24) & (wn > 1e-8) & np.all(np.isfinite(grad), axis=1)
    w = w / np.where(wn > 0, wn, 1.0)[:, None]

    def reach(d):
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(d > 0, (hi - x) / d, np.inf)
            down = np.where(d < 0, (lo - x) / d, np.inf)
        return np.min(np.minimum(up, down), axis=1)

    fwd, back = reach(w), reach(-w)
    sign = np.where(fwd >= back, 1.0, -1.0)
    step = np.maximum(fwd, back) * (0.1 + 0.9 * u_len)
    valid &= np.isfinite(step) & (step >= TANGENT_MIN_STEP * np.linalg.norm(hi - lo))
    step = np.where(valid, step, 0.0)
    y = np.clip(x + (sign * step)[:, None] * w, lo, hi)
    return y, valid


def _scan(f, domain, trials, seed, kind, tol):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = domain.dim
    rng = make_rng(seed)
    t_grid = T_GRID[1:-1] if kind == "strict" else T_GRID
    lo, hi = domain.inner_lower, domain.inner_upper
    width = hi - lo
    first = best = None
    count = 0
    done = 0
    while done < trials:
        m = min(CHUNK, trials - done)
        u = rng.random((m, ROW_WIDTH(n)))
        x = lo + u[:, :n] * width
        y_rand = lo + u[:, n : 2 * n] * width
        t_rand = u[:, 2 * n : 2 * n + 1]
        y_tan, tan_ok = _tangent_partner(f, x, u[:, 2 * n + 1 : 3 * n + 1], u[:, 3 * n + 1], lo, hi)
        ts = np.concatenate([t_rand, np.broadcast_to(t_grid, (m, t_grid.size))], axis=1)
        fx = np.asarray(f(x), dtype=float)
        for partner, y, ok in (("random", y_rand, None), ("tangent", y_tan, tan_ok)):
            z = (1.0 - ts)[..., None] * x[:, None, :] + ts[..., None] * y[:, None, :]
            fy = np.asarray(f(y), dtype=float)
            fz = np.asarray(f(z), dtype=float)
            if kind == "concave":
                rhs = (1.0 - ts) * fx[:, None] + ts * fy[:, None]
            else:
                rhs = np.broadcast_to(np.minimum(fx, fy)[:, None], fz.shape)
            if kind == "strict":
                far = np.linalg.norm(x - y, axis=1) >= STRICT_MIN_DISTANCE
                bad = (fz <= rhs + tol) & far[:, None]
            else:
                bad = fz < rhs - tol
            if ok is not None:
                bad &= ok[:, None]
            if not bad.any():
                continue
            rows, cols = np.nonzero(bad)
            count += rows.size
            r, c = rows[0], cols[0]
            cand = _witness(done + r, partner, x[r], y[r], ts[r, c], z[r, c], fx[r], fy[r], fz[r, c], rhs[r, c])
            if first is None or cand["trial"] < first["trial"]:
                first = cand
            gaps = (rhs - fz)[rows, cols]
            k = int(np.argmax(gaps))
            if best is None or gaps[k] > best["gap"]:
                r, c = rows[k], cols[k]
                best = _witness(done + r, partner, x[r], y[r], ts[r, c], z[r, c], fx[r], fy[r], fz[r, c], rhs[r, c])
        done += m
    witnesses = []
    if first is not None:
        witnesses.append(first)
        key = lambda w: (w["trial"], w["partner"], w["t"])  # noqa: E731
        if key(best) != key(first):
            witnesses.append(best)
    return witnesses, count


def _report(mode, f, domain, trials, seed, tol, kind):
    witnesses, count = _scan(f, domain, trials, seed, kind, tol)
    tolerances = {"tol": tol}
    if kind == "strict":
        tolerances["min_distance"] = STRICT_MIN_DISTANCE
    return CertReport(
        mode=mode,
        verdict=Verdict.REFUTED if witnesses else Verdict.NO_VIOLATION,
        witnesses=witnesses,
        tolerances=tolerances,
        grid={"trials": int(trials), "seed": int(seed), "t_grid_points": int(T_GRID.size), "domain": domain.to_dict()},
        metadata={
            "violations": int(count),
            "fd_used": {},
            "generator": GENERATOR,
        },
    )


def quasiconcavity_oracle(f, domain: BoxDomain, trials=10_000, seed=0, tol=1e-10) -> CertReport:
    """Search for f((1-t)x + ty) < min(f(x), f(y)) - tol."""
    return _report("oracle", f, domain, trials, seed, tol, "quasi")


def strict_quasiconcavity_oracle(f, domain: BoxDomain, trials=10_000, seed=0, tol=STRICT_BAND) -> CertReport:
    """Search for f((1-t)x + ty) <= min(f(x), f(y)) + tol with 0 < t < 1.

    Pairs closer than 1e-6 are skipped so that round-off near x = y is not
    mistaken for equality.
    """
    return _report("strict_oracle", f, domain, trials, seed, tol, "strict")


def concavity_oracle(f, domain: BoxDomain, trials=10_000, seed=0, tol=1e-10) -> CertReport:
    """Search for f((1-t)x + ty) < (1-t) f(x) + t f(y) - tol."""
    return _report("concavity", f, domain, trials, seed, tol, "concave")


def replay(f, witness):
    """Recompute (lhs, rhs) for a witness of any oracle mode."""
    x, y, t = np.asarray(witness["x"]), np.asarray(witness["y"]), witness["t"]
    lhs = float(f((1.0 - t) * x + t * y))
    fx, fy = float(f(x)), float(f(y))
    return lhs, fx, fy


def concavity_conjecture_mode(f, pair, domain: BoxDomain, grid: GridSpec, trials=10_000, seed=0, tol=1e-8):
    """EXPERIMENTAL: compare negative semi-definiteness of sym(Dg) with the concavity oracle.

    Nothing is asserted about the open question; the report carries a
    per-point table and whether the two sides agree on this sample.
    """
    points = domain.grid_points(grid)
    J = pair.jacobian(points).reshape(len(points), pair.dim, pair.dim)
    eigs = nk.kernel_max_eig(np.zeros((len(points), pair.dim)), J, np.inf)
    nsd = bool(np.all(eigs <= tol))
    oracle = concavity_oracle(f, domain, trials, seed)
    oracle_clean = oracle.verdict is Verdict.NO_VIOLATION
    table = [{"x": p, "max_eig_sym_dg": float(e), "nsd": bool(e <= tol)} for p, e in zip(points, eigs)]
    return CertReport(
        mode="concavity",
        verdict=oracle.verdict,
        witnesses=oracle.witnesses,
        tolerances={"tol": tol, "oracle_tol": oracle.tolerances["tol"]},
        grid={**grid.to_dict(), "points": int(len(points)), "trials": int(trials), "seed": int(seed), "domain": domain.to_dict()},
        metadata={
            "experimental": True,
            "dg_nsd_everywhere": nsd,
            "nsd_points": int(np.count_nonzero(eigs <= tol)),
            "max_eig_sym_dg": float(eigs.max()),
            "oracle_finds_violation": not oracle_clean,
            "consistent": nsd == oracle_clean,
            "table": table,
            "fd_used": dict(pair.fd_flags),
            "generator": GENERATOR,
        },
    )

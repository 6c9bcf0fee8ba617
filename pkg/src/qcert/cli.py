"""Command-line driver: ``qcert <mode> --function <builtin|expr> ...``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags; later sources win.

Exit codes: 0 certified or no violation found, 1 refuted, 2 undetermined,
3 precondition failed, 4 usage or configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from qcert import certifier, level_tracer, oracle, property_n
from qcert.corpus import builtin_corpus, get_entry
from qcert.errors import ConfigError, DegenerateSlope, PreconditionFailed, QCertError, VanishingGradient
from qcert.expr import parse
from qcert.function_model import (
    GENERATOR,
    BoxDomain,
    C1StarPair,
    GridSpec,
    ScalarField,
    validate_pair,
)
from qcert.report import EXIT_USAGE, CertReport, write_atomic

COMMANDS = (
    "validate",
    "theorem1",
    "theorem2",
    "lemma1",
    "property-n",
    "oracle",
    "strict-oracle",
    "concavity",
    "concavity-conjecture",
    "trace",
    "corpus",
)
EXIT_PRECONDITION = 3


@dataclass
class RunConfig:
    mode: str = "theorem1"
    function: Optional[str] = None
    g: Optional[str] = None
    lam: Optional[str] = None
    domain: Optional[str] = None
    grid: int = 21
    random_points: int = 0
    trials: int = 10_000
    seed: int = 0
    tol: float = 1e-8
    fd_tol: float = 1e-6
    format: str = "text"
    out: Optional[str] = None
    x_star: Optional[str] = None
    c: Optional[float] = None
    x1_range: Optional[str] = None
    x1_start: float = 0.0
    step: float = 1e-3

    def validate(self):
        if self.mode not in COMMANDS:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(COMMANDS)}")
        if self.format not in ("text", "json"):
            raise ConfigError("format must be text or json")
        if self.mode != "corpus" and not self.function:
            raise ConfigError("--function is required")
        if self.grid < 2 or self.random_points < 0 or self.trials < 1 or self.seed < 0:
            raise ConfigError("grid >= 2, random_points >= 0, trials >= 1 and seed >= 0 are required")
        if not (self.tol >= 0 and self.fd_tol >= 0 and self.step > 0):
            raise ConfigError("tolerances must be non-negative and step positive")
        if self.lam and not self.g:
            raise ConfigError("--lambda needs --g")
        return self

    def to_text(self):
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is not None:
                lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        return cls(**_coerce(_read_pairs(text)))


_FIELD_TYPES = {"grid": int, "random_points": int, "trials": int, "seed": int, "tol": float, "fd_tol": float, "c": float, "x1_start": float, "step": float}
_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def _read_pairs(text):
    pairs = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {number}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lam"
        if key not in _KEYS:
            raise ConfigError(f"config line {number}: unknown key {key!r}")
        pairs[key] = value
    return pairs


def _coerce(pairs):
    out = {}
    for key, value in pairs.items():
        kind = _FIELD_TYPES.get(key)
        try:
            out[key] = kind(value) if kind else value
        except ValueError:
            raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None
    return out


# -- problem assembly -------------------------------------------------------


@dataclass
class Problem:
    f: ScalarField
    pair: C1StarPair
    domain: BoxDomain
    explicit_pair: bool
    fd_used: bool


def _expression_field(text, dim, name):
    e = parse(text, dim)
    return ScalarField(dim=dim, func=e, name=name)


def build_problem(config: RunConfig) -> Problem:
    domain = BoxDomain.parse(config.domain) if config.domain else None
    try:
        entry = get_entry(config.function)
    except KeyError:
        entry = None
    if entry is not None:
        domain = domain or entry.domain
        if domain.dim != entry.dim:
            raise ConfigError(f"{entry.name} has dimension {entry.dim}, domain has {domain.dim}")
        f, pair = entry.f, entry.pair
        explicit = entry.pair.g is not getattr(entry.f, "grad", None)
    else:
        if domain is None:
            raise ConfigError("an expression needs --domain")
        f = _expression_field(config.function, domain.dim, config.function)
        pair = C1StarPair.from_gradient(f)
        explicit = False
    if config.g:
        parts = [p for p in config.g.split(";")]
        if len(parts) != domain.dim:
            raise ConfigError(f"--g needs {domain.dim} expressions separated by ';', got {len(parts)}")
        comps = [parse(p.strip(), domain.dim) for p in parts]

        def g(x, comps=comps):
            x = np.asarray(x, dtype=float)
            return np.stack([np.broadcast_to(c(x), x.shape[:-1]) for c in comps], axis=-1)

        lam_expr = parse(config.lam, domain.dim) if config.lam else None
        lam = (lambda x: np.broadcast_to(lam_expr(x), np.shape(x)[:-1])) if lam_expr else (lambda x: np.ones(np.shape(x)[:-1]))
        pair = C1StarPair(dim=domain.dim, g=g, lam=lam, name="user")
        explicit = True
    fd_used = any(pair.fd_flags.values()) or not f.analytic_grad
    return Problem(f=f, pair=pair, domain=domain, explicit_pair=explicit, fd_used=fd_used)


def _floats(text, what):
    try:
        return [float(v) for v in text.replace(":", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read {what} from {text!r}") from None


# -- dispatch ---------------------------------------------------------------


def _effective_tol(config, problem):
    # numerical derivatives cannot resolve margins finer than the FD error
    return max(config.tol, config.fd_tol) if problem.fd_used else config.tol


def run(config: RunConfig):
    """Run one mode. Returns ``(exit_code, output_text)``."""
    config.validate()
    if config.mode == "corpus":
        return 0, _corpus_listing(config)
    problem = build_problem(config)
    grid = GridSpec(config.grid, config.seed, config.random_points)
    tol = _effective_tol(config, problem)

    if problem.explicit_pair or config.mode == "validate":
        check = validate_pair(problem.f, problem.pair, problem.domain, grid, tol=max(config.fd_tol, 1e-6))
        if config.mode == "validate":
            return check.exit_code, _render(check, config)
        if check.exit_code != 0:
            raise ConfigError("Df = lambda g fails on the grid; run the validate mode for witnesses")

    mode = config.mode
    if mode == "theorem1":
        report = certifier.certify_theorem1(problem.pair, problem.domain, grid, tol)
    elif mode == "theorem2":
        report = certifier.certify_theorem2(problem.pair, problem.domain, grid, tol)
    elif mode == "lemma1":
        if not config.x_star:
            raise ConfigError("lemma1 needs --x-star")
        report = certifier.lemma1_check(problem.f, _floats(config.x_star, "x_star"), problem.domain, grid, tol)
    elif mode == "property-n":
        report = property_n.conjecture_mode(problem.pair, problem.domain, grid, tol)
    elif mode == "oracle":
        report = oracle.quasiconcavity_oracle(problem.f, problem.domain, config.trials, config.seed)
    elif mode == "strict-oracle":
        report = oracle.strict_quasiconcavity_oracle(problem.f, problem.domain, config.trials, config.seed)
    elif mode == "concavity":
        report = oracle.concavity_oracle(problem.f, problem.domain, config.trials, config.seed)
    elif mode == "concavity-conjecture":
        report = oracle.concavity_conjecture_mode(
            problem.f, problem.pair, problem.domain, grid, config.trials, config.seed, tol
        )
    else:
        return 0, _trace(config, problem)
    if tol != config.tol and mode not in ("oracle", "strict-oracle", "concavity"):
        report.metadata["requested_tol"] = config.tol
    return report.exit_code, _render(report, config)


def _render(report: CertReport, config):
    return report.to_json() + "\n" if config.format == "json" else report.to_text()


def _trace(config, problem):
    if config.c is None:
        raise ConfigError("trace needs --c")
    if config.x1_range:
        lo_hi = _floats(config.x1_range, "x1_range")
        if len(lo_hi) != 2:
            raise ConfigError("--x1-range is lo:hi")
    else:
        lo_hi = (problem.domain.lower[0], problem.domain.upper[0])
    trace = level_tracer.trace_level(problem.pair, config.c, lo_hi, config.step, problem.domain, config.x1_start)
    if config.format == "json":
        return json.dumps(
            {
                "mode": "trace",
                "c": trace.c,
                "step": trace.step,
                "method": trace.method,
                "samples": trace.samples.tolist(),
                "level_deviation": level_tracer.level_consistency(trace, problem.f),
                "min_second_difference": level_tracer.convexity_probe(trace) if len(trace) >= 3 else None,
            },
            indent=2,
        ) + "\n"
    return level_tracer.trace_csv(trace, problem.f)


def _corpus_listing(config):
    entries = builtin_corpus()
    if config.format == "json":
        data = [
            {
                "name": e.name,
                "dim": e.dim,
                "domain": e.domain.format(),
                "labels": dataclasses.asdict(e.labels),
                "expression": e.expression,
                "notes": e.notes,
            }
            for e in entries
        ]
        return json.dumps({"generator": GENERATOR, "entries": data}, indent=2) + "\n"
    rows = [f"{'name':<14} {'qc':<3} {'sqc':<3} {'cc':<3} {'Df!=0':<5} domain"]
    yn = lambda b: "y" if b else "n"  # noqa: E731
    for e in entries:
        lb = e.labels
        rows.append(
            f"{e.name:<14} {yn(lb.quasiconcave):<3} {yn(lb.strictly):<3} {yn(lb.concave):<3} "
            f"{yn(lb.df_nonvanishing):<5} {e.domain.format()}"
        )
    return "\n".join(rows) + "\n"


# -- argument handling ------------------------------------------------------


def build_parser():
    d = RunConfig()
    p = argparse.ArgumentParser(
        prog="qcert",
        description="Grid certificates and sampling checks for quasi-concavity.",
        epilog="Random draws use " + GENERATOR + ". Exit codes: 0 certified/no violation, "
        "1 refuted, 2 undetermined, 3 precondition failed, 4 usage error.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    S = argparse.SUPPRESS
    # argparse checks a positional's default against choices, so None stands in for "not given"
    p.add_argument("mode", choices=COMMANDS, nargs="?", default=None, help=f"test to run (default {d.mode})")
    p.add_argument("--function", default=S, help="builtin corpus name or expression in x1..xn")
    p.add_argument("--g", default=S, help="g as expressions separated by ';'")
    p.add_argument("--lambda", dest="lam", default=S, help="lambda as an expression (default 1)")
    p.add_argument("--domain", default=S, help='box such as "x1:-0.5:0.5,x2:-0.5:0.5" (builtins have one)')
    p.add_argument("--grid", type=int, default=S, help=f"points per axis (default {d.grid})")
    p.add_argument("--random-points", type=int, default=S, help=f"extra seeded grid points (default {d.random_points})")
    p.add_argument("--trials", type=int, default=S, help=f"oracle trials (default {d.trials})")
    p.add_argument("--seed", type=int, default=S, help=f"random seed (default {d.seed})")
    p.add_argument("--tol", type=float, default=S, help=f"decision tolerance (default {d.tol:g})")
    p.add_argument("--fd-tol", type=float, default=S, help=f"tolerance floor with numerical derivatives (default {d.fd_tol:g})")
    p.add_argument("--format", choices=("text", "json"), default=S, help=f"report format (default {d.format})")
    p.add_argument("--out", default=S, help="write the report here instead of stdout")
    p.add_argument("--x-star", default=S, help="lemma1 point, comma separated")
    p.add_argument("--c", type=float, default=S, help="trace: x2 at the starting x1")
    p.add_argument("--x1-range", default=S, help="trace: lo:hi (default the box)")
    p.add_argument("--x1-start", type=float, default=S, help=f"trace: starting x1 (default {d.x1_start:g})")
    p.add_argument("--step", type=float, default=S, help=f"trace: RK4 step (default {d.step:g})")
    p.add_argument("--config", default=S, help="key = value file; flags override it")
    p.add_argument("--dump-config", action="store_true", help="print the merged configuration and exit")
    return p


def config_from_args(argv):
    ns = vars(build_parser().parse_args(argv))
    dump = ns.pop("dump_config", False)
    if ns.get("mode") is None:
        ns.pop("mode", None)
    values = {}
    path = ns.pop("config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(_coerce(_read_pairs(fh.read())))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    values.update(ns)
    return RunConfig(**values), dump


def main(argv=None):
    try:
        config, dump = config_from_args(sys.argv[1:] if argv is None else argv)
        if dump:
            sys.stdout.write(config.validate().to_text())
            return 0
        code, text = run(config)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    except (PreconditionFailed, VanishingGradient, DegenerateSlope) as exc:
        print(f"qcert: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (QCertError, ValueError, ArithmeticError) as exc:
        print(f"qcert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config.out:
        write_atomic(config.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

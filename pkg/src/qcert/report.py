"""Report containers shared by all test modes, plus JSON/text emission."""
from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from qcert import __version__


class Verdict(str, enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    UNDETERMINED = "undetermined"
    PRECONDITION_FAILED = "precondition_failed"
    # sampling oracles cannot certify; they only fail to find a violation
    NO_VIOLATION = "no_violation"


MODES = (
    "theorem1",
    "theorem2",
    "lemma1",
    "property_n",
    "oracle",
    "strict_oracle",
    "concavity",
    "validate",
)

EXIT_CODES = {
    Verdict.CERTIFIED: 0,
    Verdict.REFUTED: 1,
    Verdict.UNDETERMINED: 2,
    Verdict.PRECONDITION_FAILED: 3,
    Verdict.NO_VIOLATION: 0,
}
EXIT_USAGE = 4


@dataclass
class PointMargin:
    x: np.ndarray
    max_kernel_eig: float
    grad_norm: float

    def to_dict(self):
        return {
            "x": _floats(self.x),
            "max_kernel_eig": _num(self.max_kernel_eig),
            "grad_norm": _num(self.grad_norm),
        }


@dataclass
class CertReport:
    """Outcome of one test mode.

    ``witnesses`` are plain dicts so each mode can record what identifies
    its violation (a grid point and kernel direction, an index subset, an
    ``(x, y, t)`` triple...).
    """

    mode: str
    verdict: Verdict
    margins: list[PointMargin] = field(default_factory=list)
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    tolerances: dict[str, float] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.verdict = Verdict(self.verdict)
        if self.verdict is Verdict.REFUTED and not self.witnesses:
            raise ValueError("a refuted report needs at least one witness")

    @property
    def exit_code(self):
        return EXIT_CODES[self.verdict]

    def to_dict(self):
        meta = {"version": __version__}
        meta.update(self.metadata)
        meta.setdefault("fd_used", {})
        meta.setdefault("generator", None)
        return _jsonable(
            {
                "mode": self.mode,
                "verdict": self.verdict.value,
                "tolerances": self.tolerances,
                "grid": self.grid,
                "margins": [m.to_dict() for m in self.margins],
                "witnesses": self.witnesses,
                "metadata": meta,
            }
        )

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, allow_nan=False)

    def to_text(self, max_witnesses=5):
        lines = [f"mode:    {self.mode}", f"verdict: {self.verdict.value}"]
        if self.tolerances:
            lines.append("tolerances: " + ", ".join(f"{k}={v:g}" for k, v in self.tolerances.items()))
        if self.grid:
            lines.append("grid: " + ", ".join(f"{k}={v}" for k, v in self.grid.items() if k != "domain"))
        if self.margins:
            worst = max(self.margins, key=lambda m: m.max_kernel_eig)
            lines.append(
                f"points: {len(self.margins)}; largest kernel eigenvalue {worst.max_kernel_eig:.6g} "
                f"at x = {np.array2string(np.asarray(worst.x), precision=6)}"
            )
        for w in self.witnesses[:max_witnesses]:
            lines.append("witness: " + json.dumps(_jsonable(w)))
        if len(self.witnesses) > max_witnesses:
            lines.append(f"... {len(self.witnesses) - max_witnesses} more witnesses")
        for key, value in self.metadata.items():
            if key in ("table",):
                continue
            lines.append(f"{key}: {json.dumps(_jsonable(value))}")
        return "\n".join(lines) + "\n"


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _floats(x):
    return [float(t) for t in np.ravel(x)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qcert-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_vec = {"type": "array", "items": {"type": "number"}}
_num_or_null = {"type": ["number", "null"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qcert report",
    "type": "object",
    "required": ["mode", "verdict", "tolerances", "grid", "margins", "witnesses", "metadata"],
    "additionalProperties": False,
    "properties": {
        "mode": {"type": "string", "enum": list(MODES)},
        "verdict": {"type": "string", "enum": [v.value for v in Verdict]},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "grid": {"type": "object"},
        "margins": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "max_kernel_eig"],
                "properties": {"x": _vec, "max_kernel_eig": _num_or_null, "grad_norm": _num_or_null},
            },
        },
        "witnesses": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "x": _vec,
                    "y": _vec,
                    "t": {"type": "number"},
                    "lhs": {"type": "number"},
                    "rhs": {"type": "number"},
                    "gap": {"type": "number"},
                },
            },
        },
        "metadata": {
            "type": "object",
            "required": ["fd_used", "generator", "version"],
            "properties": {
                "fd_used": {"type": "object", "additionalProperties": {"type": "boolean"}},
                "generator": {"type": ["string", "null"]},
                "version": {"type": "string"},
            },
        },
    },
}

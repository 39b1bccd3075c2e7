"""Check results and reports returned by the validators."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np


def jsonable(obj):
    """Convert labels, numpy scalars and Fractions into plain JSON values."""
    if isinstance(obj, (str, bool)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    return str(obj)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a single check.

    ``passed`` is false exactly when ``max_error > tolerance`` or the check is
    structural and was violated.  Structural checks store ``max_error`` 0 or 1
    with tolerance 0.
    """

    name: str
    passed: bool
    max_error: float = 0.0
    tolerance: float = 0.0
    witness: Any = None
    detail: str = ""

    @classmethod
    def boolean(cls, name, ok, witness=None, detail=""):
        return cls(name, bool(ok), 0.0 if ok else 1.0, 0.0,
                   None if ok else jsonable(witness), detail)

    @classmethod
    def numeric(cls, name, error, tolerance, witness=None, detail=""):
        error = float(error)
        ok = bool(error <= tolerance)
        return cls(name, ok, error, float(tolerance),
                   None if ok else jsonable(witness), detail)

    def to_dict(self):
        d = {"name": self.name, "status": "pass" if self.passed else "fail",
             "max_error": self.max_error, "tolerance": self.tolerance}
        if self.witness is not None:
            d["witness"] = jsonable(self.witness)
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass(frozen=True)
class Report:
    """Ordered collection of :class:`CheckResult` entries."""

    title: str
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name):
        return any(c.name == name for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def extend(self, other, prefix=""):
        extra = tuple(CheckResult(prefix + c.name, c.passed, c.max_error, c.tolerance,
                                  c.witness, c.detail) for c in other.checks)
        return Report(self.title, self.checks + extra)

    def to_dict(self):
        return {"title": self.title, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}

    def summary(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            tag = "pass" if c.passed else "FAIL"
            lines.append(f"  [{tag}] {c.name} (err={c.max_error:.3g}, tol={c.tolerance:.3g})")
        return "\n".join(lines)

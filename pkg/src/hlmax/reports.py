"""Structured results: measurements, inequality margins, experiment reports.

Every checking routine returns an :class:`ExperimentReport` rather than a bare
bool, so that the CLI and the suite runner can serialize what was measured,
what was asserted, and with how much slack.  A report passes iff every margin
satisfies ``lhs <= rhs + slack``; the pass flag is recomputed from the stored
numbers, never stored independently.
"""

from __future__ import annotations

import csv
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, asdict

SCHEMA_VERSION = 1


@dataclass
class Measurement:
    name: str
    value: float
    std_error: float = 0.0

    def to_dict(self):
        return {"name": self.name, "value": _jsonify(self.value),
                "std_error": float(self.std_error)}


@dataclass
class Margin:
    """One asserted inequality ``lhs <= rhs + slack``."""

    name: str
    lhs: float
    rhs: float
    slack: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.lhs <= self.rhs + self.slack)

    @property
    def gap(self) -> float:
        """Signed headroom; negative means violated."""
        return float(self.rhs + self.slack - self.lhs)

    def to_dict(self):
        return {"name": self.name, "lhs": float(self.lhs), "rhs": float(self.rhs),
                "slack": float(self.slack), "passed": self.passed, "note": self.note}


@dataclass
class ExperimentReport:
    op_name: str
    inputs: dict = field(default_factory=dict)
    seed: int | None = None
    gating: bool = True
    measurements: list = field(default_factory=list)
    margins: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.margins)

    @property
    def worst_margin(self):
        if not self.margins:
            return None
        return min(self.margins, key=lambda m: m.gap)

    def add_measurement(self, name, value, std_error=0.0):
        self.measurements.append(Measurement(name, value, std_error))

    def add_margin(self, name, lhs, rhs, slack=0.0, note=""):
        self.margins.append(Margin(name, float(lhs), float(rhs), float(slack), note))

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "op_name": self.op_name,
            "inputs": _jsonify(self.inputs),
            "seed": self.seed,
            "gating": self.gating,
            "passed": self.passed,
            "measurements": [m.to_dict() for m in self.measurements],
            "margins": [m.to_dict() for m in self.margins],
            "notes": list(self.notes),
            "wall_time": float(self.wall_time),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = self.worst_margin
        tail = ""
        if worst is not None:
            tail = f" worst={worst.name} gap={worst.gap:.3e}"
        return f"{self.op_name}: {status} ({len(self.margins)} margins){tail}"


@dataclass
class NormEstimate:
    """Certified-by-witness lower bound for an operator norm.

    ``witness`` holds everything needed to re-evaluate the ratio from scratch
    (atom locations/weights plus the operator description); ``recompute_gap``
    is filled by the verifier with |stored - recomputed|.
    """

    operator: dict
    p: float
    lower_bound: float
    witness: dict
    search_budget: int
    seed: int
    recompute_gap: float | None = None

    def to_dict(self):
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return _jsonify(d)

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def margins_to_csv(reports, path):
    """Flatten margins of many reports into one CSV (suite output)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["op_name", "margin", "lhs", "rhs", "slack", "gap", "passed"])
        for rep in reports:
            for m in rep.margins:
                w.writerow([rep.op_name, m.name, f"{m.lhs:.12g}", f"{m.rhs:.12g}",
                            f"{m.slack:.12g}", f"{m.gap:.12g}", m.passed])


@contextmanager
def timed(report: ExperimentReport):
    t0 = time.perf_counter()
    try:
        yield report
    finally:
        report.wall_time = time.perf_counter() - t0


def _jsonify(obj):
    """Coerce numpy scalars/arrays and tuples into JSON-safe structures."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj

"""Experiment reports and their on-disk forms (report.json, replicas.csv, plot CSVs)."""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..bounds import BoundReport

PROVENANCES = ("paper bound", "control-calibrated", "reported-only")


@dataclass
class PassFlag:
    name: str
    measured: str
    threshold: float | None
    provenance: str
    passed: bool | None = None
    comparison: str = "<="

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance == "reported-only":
            self.passed = None

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "threshold": self.threshold,
                "comparison": self.comparison, "provenance": self.provenance,
                "passed": self.passed}


@dataclass
class ExperimentReport:
    scenario: str
    config: dict
    measured: dict = field(default_factory=dict)
    bound: BoundReport | None = None
    other_bounds: dict = field(default_factory=dict)
    pass_flags: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    replicas: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    headline: str | None = None
    runtime_seconds: float = 0.0

    def check(self, name: str, measured_key: str, threshold: float, provenance: str,
              comparison: str = "<=") -> bool | None:
        """Record a pass flag comparing ``measured[measured_key]`` to ``threshold``."""
        value = self.measured[measured_key]
        if provenance == "reported-only":
            ok = None
        elif comparison == "<=":
            ok = bool(value <= threshold)
        elif comparison == ">=":
            ok = bool(value >= threshold)
        else:
            raise ValueError(comparison)
        self.pass_flags.append(PassFlag(name, measured_key, float(threshold), provenance, ok, comparison))
        return ok

    def check_range(self, name: str, measured_key: str, lo: float, hi: float, provenance: str):
        self.check(name + "_lo", measured_key, lo, provenance, ">=")
        self.check(name + "_hi", measured_key, hi, provenance, "<=")

    def report_only(self, name: str, measured_key: str, threshold: float | None = None):
        self.pass_flags.append(PassFlag(name, measured_key, threshold, "reported-only"))

    @property
    def asserted(self) -> list:
        return [f for f in self.pass_flags if f.passed is not None]

    @property
    def status(self) -> str:
        if any(f.passed is False for f in self.pass_flags):
            return "fail"
        if self.asserted:
            return "pass"
        return "reported"

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def flag(self, name: str) -> PassFlag:
        for f in self.pass_flags:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> dict:
        """JSON form.  Wall-clock runtime is deliberately absent so that reruns
        with the same config are byte-identical."""
        return _clean({
            "scenario": self.scenario,
            "status": self.status,
            "headline": self.headline,
            "measured": self.measured,
            "bound": None if self.bound is None else self.bound.to_dict(),
            "other_bounds": {k: v.to_dict() for k, v in self.other_bounds.items()},
            "pass_flags": [f.to_dict() for f in self.pass_flags],
            "notes": self.notes,
            "details": self.details,
            "samples": self.samples,
            "config": self.config,
            "rng": {"seed": self.config.get("seed"), "stream_id": self.config.get("stream_id")},
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def summary_line(self) -> str:
        parts = [f"scenario={self.scenario}"]
        if self.headline not in (None, "bound") and self.headline in self.measured:
            parts.append(f"{self.headline}={self.measured[self.headline]:.6g}")
        if self.bound is not None:
            parts.append(f"bound={self.bound.symbolic}" + (" (vacuous)" if self.bound.vacuous else ""))
        parts.append(f"status={self.status}")
        return " ".join(parts)


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


# -- files -------------------------------------------------------------------

def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _header(report: ExperimentReport, columns: list[str]) -> str:
    cfg = json.dumps(_clean(report.config), sort_keys=True, separators=(",", ":"))
    rng = json.dumps({"seed": report.config.get("seed"), "stream_id": report.config.get("stream_id")},
                     sort_keys=True, separators=(",", ":"))
    return (f"# scenario: {report.scenario}\n# config: {cfg}\n# rng: {rng}\n"
            f"# columns: {','.join(columns)}\n")


def csv_text(report: ExperimentReport, columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(_header(report, columns))
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_number(v) for v in row) + "\n")
    return buf.getvalue()


def replicas_csv(report: ExperimentReport) -> str:
    rows = report.replicas
    columns = list(rows[0].keys()) if rows else ["replica"]
    return csv_text(report, columns, ([r.get(c, "") for c in columns] for r in rows))


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(report: ExperimentReport, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "replicas": out / "replicas.csv",
             "timing": out / "timing.json"}
    _atomic_write(paths["report"], report.to_json())
    _atomic_write(paths["replicas"], replicas_csv(report))
    _atomic_write(paths["timing"], json.dumps({"runtime_seconds": report.runtime_seconds}) + "\n")
    return paths

"""Check reports: one row per instance, a verdict and the constants used."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

__all__ = ["CheckReport", "InstanceRow", "fmt"]


def fmt(v) -> str:
    """Shortest round-trip text for numbers; plain ``str`` otherwise."""
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    try:
        return repr(float(v))
    except (TypeError, ValueError):
        return str(v)


@dataclass
class InstanceRow:
    """One tested inequality ``lhs <= rhs + slack``."""

    name: str
    params: str
    lhs: float
    rhs: float
    slack: float = 0.0
    status: str = "ok"
    note: str = ""

    @property
    def margin(self) -> float:
        """``(rhs - lhs) / |rhs|``; negative beyond the slack means a violation."""
        if self.status == "skipped":
            return math.nan
        scale = abs(self.rhs) if self.rhs != 0 else 1.0
        return (self.rhs - self.lhs) / scale


def classify(lhs, rhs, slack) -> str:
    return "ok" if lhs <= rhs + slack else "violation"


@dataclass
class CheckReport:
    check_name: str
    rows: list = field(default_factory=list)
    constants_used: dict = field(default_factory=dict)
    summary_extra: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def add(self, name, params, lhs, rhs, slack=0.0, note="") -> InstanceRow:
        row = InstanceRow(name, params, float(lhs), float(rhs), float(slack),
                          classify(lhs, rhs, slack), note)
        self.rows.append(row)
        return row

    def skip(self, name, params, reason) -> InstanceRow:
        row = InstanceRow(name, params, math.nan, math.nan, 0.0, "skipped", reason)
        self.rows.append(row)
        return row

    def fail(self, message: str) -> None:
        """Record a failure that is not tied to a single inequality (e.g. a fitted band)."""
        self.failures.append(message)

    def constant(self, name, value, provenance) -> None:
        if provenance not in ("paper_formula", "empirical_fit", "analytic"):
            raise ValueError(f"unknown provenance {provenance!r}")
        self.constants_used[name] = (float(value), provenance)

    @property
    def instances(self) -> int:
        return sum(r.status != "skipped" for r in self.rows)

    @property
    def skipped(self) -> int:
        return sum(r.status == "skipped" for r in self.rows)

    @property
    def violations(self) -> int:
        return sum(r.status == "violation" for r in self.rows)

    @property
    def worst_margin(self) -> float:
        m = [r.margin for r in self.rows if r.status != "skipped"]
        return min(m) if m else math.nan

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.failures

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["check", "instance", "params", "lhs", "rhs", "slack",
                      "margin", "status", "note"])
        for r in self.rows:
            out.writerow([self.check_name, r.name, r.params, fmt(r.lhs), fmt(r.rhs),
                          fmt(r.slack), fmt(r.margin), r.status, r.note])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.check_name}: "
                 f"{self.instances} instances, {self.violations} violations, "
                 f"{self.skipped} skipped, worst margin {fmt(self.worst_margin)}"]
        for name, (value, prov) in sorted(self.constants_used.items()):
            lines.append(f"    {name} = {fmt(value)} ({prov})")
        for key, value in self.summary_extra.items():
            lines.append(f"    {key}: {fmt(value)}")
        for msg in self.failures:
            lines.append(f"    failure: {msg}")
        return "\n".join(lines)


"""Experiment reports and their three text renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

FORMATS = ("table", "csv", "records")


@dataclass(frozen=True)
class ReportRow:
    configuration: str
    correct: int
    total: int
    columns: dict = field(default_factory=dict)  # extra descriptive columns, in display order

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def percent(self) -> int:
        return round(100 * self.correct / self.total) if self.total else 0


@dataclass(frozen=True)
class ExperimentReport:
    title: str
    rows: tuple[ReportRow, ...]
    metadata: dict = field(default_factory=dict)

    def row(self, configuration: str) -> ReportRow:
        for r in self.rows:
            if r.configuration == configuration:
                return r
        raise KeyError(configuration)


def _extra_keys(report: ExperimentReport) -> list[str]:
    keys: dict[str, None] = {}
    for r in report.rows:
        keys.update(dict.fromkeys(r.columns))
    return list(keys)


def emit_report(report: ExperimentReport, fmt: str = "table") -> str:
    if fmt == "table":
        return _table(report)
    if fmt == "csv":
        return _csv(report)
    if fmt == "records":
        return _records(report)
    raise ValueError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")


def _table(report: ExperimentReport) -> str:
    extra = _extra_keys(report)
    header = extra + ["configuration", "no. correct", "total", "percent correct"]
    body = [
        [str(r.columns.get(k, "")) for k in extra] + [r.configuration, str(r.correct), str(r.total), str(r.percent)]
        for r in report.rows
    ]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
    numeric = {len(header) - 3, len(header) - 2, len(header) - 1}

    def line(cells):
        return "  ".join(c.rjust(w) if i in numeric else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths)))

    out = [report.title, line(header), "  ".join("-" * w for w in widths)]
    out += [line(b) for b in body]
    return "\n".join(s.rstrip() for s in out) + "\n"


def _csv(report: ExperimentReport) -> str:
    extra = _extra_keys(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(extra + ["configuration", "correct", "total", "accuracy", "percent"])
    for r in report.rows:
        w.writerow([r.columns.get(k, "") for k in extra] + [r.configuration, r.correct, r.total, repr(r.accuracy), r.percent])
    return buf.getvalue()


def _records(report: ExperimentReport) -> str:
    lines = []
    for i, r in enumerate(report.rows):
        rec = {
            "report": report.title,
            "row": i,
            "configuration": r.configuration,
            **r.columns,
            "correct": r.correct,
            "total": r.total,
            "accuracy": r.accuracy,
            "percent": r.percent,
            "metadata": report.metadata,
        }
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def parse_records(text: str) -> ExperimentReport:
    """Rebuild a report from ``records`` output."""
    recs = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not recs:
        return ExperimentReport("", ())
    fixed = {"report", "row", "configuration", "correct", "total", "accuracy", "percent", "metadata"}
    rows = tuple(
        ReportRow(r["configuration"], r["correct"], r["total"], {k: v for k, v in r.items() if k not in fixed})
        for r in sorted(recs, key=lambda r: r["row"])
    )
    return ExperimentReport(recs[0]["report"], rows, recs[0]["metadata"])

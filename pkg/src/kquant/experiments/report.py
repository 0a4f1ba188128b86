"""Writing study reports: one CSV of rows and one JSON document per study."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .studies import ConvergenceReport

CSV_HEADER = ("k", "value", "limit", "abs_err", "rel_err")


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else format(v, ".17g")


def write_csv(report: ConvergenceReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return path


def write_json(report: ConvergenceReport, path) -> Path:
    path = Path(path)
    # repr-exact floats so that identical configs give identical bytes
    path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return path


def write_report(report: ConvergenceReport, out_dir, stem: str) -> tuple:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return write_csv(report, out_dir / f"{stem}.csv"), write_json(report, out_dir / f"{stem}.json")


def format_table(report: ConvergenceReport) -> str:
    lines = [f"{report.study.value}: {'PASS' if report.passed else 'FAIL'} ({report.criterion})"]
    lines.append(f"{'k':>5} {'value':>22} {'limit':>22} {'abs_err':>12} {'rel_err':>12}")
    for r in report.rows:
        lines.append(f"{r.k:>5} {r.value:>22.15g} {r.limit:>22.15g} {r.abs_err:>12.4e} {r.rel_err:>12.4e}")
    if report.fitted_order is not None:
        lines.append(f"fitted order: {report.fitted_order:.4f}")
    return "\n".join(lines)

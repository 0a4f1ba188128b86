"""Running a configuration file end to end."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .report import write_report
from .studies import StudyFailure, run_study

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


@dataclass
class RunResult:
    status: int
    reports: list = field(default_factory=list)
    files: list = field(default_factory=list)
    messages: list = field(default_factory=list)


def execute(cfg: RunConfig) -> RunResult:
    """Run every study of ``cfg`` in order and write its CSV and JSON.

    A numerical failure stops that study only; the others still run.
    """
    result = RunResult(EXIT_OK)
    for i, inputs in enumerate(cfg.studies):
        stem = f"{i:02d}_{inputs.kind.value}"
        try:
            report = run_study(inputs)
        except StudyFailure as exc:
            result.status = EXIT_FAIL
            result.messages.append(f"study {stem}: {exc}")
            log.error("study %s: %s", stem, exc)
            continue
        result.reports.append(report)
        result.files.extend(write_report(report, cfg.out_dir, stem))
        if not report.passed:
            result.status = EXIT_FAIL
            result.messages.append(f"study {stem}: tolerance not met ({report.criterion})")
    return result


def run_config(path) -> RunResult:
    """Load, validate and execute a configuration file.

    Returns a :class:`RunResult` whose ``status`` is 0 when every study
    passes, 1 on a numerical or tolerance failure and 2 on invalid input.
    """
    try:
        cfg = load_config(Path(path))
    except ConfigError as exc:
        return RunResult(EXIT_INVALID, messages=[f"invalid config: {exc}"])
    return execute(cfg)

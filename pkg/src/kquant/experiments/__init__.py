"""Convergence studies and the ``kq`` command line."""
from .config import ConfigError, RunConfig, load_config, parse_config, parse_potential
from .report import CSV_HEADER, write_report
from .runner import EXIT_FAIL, EXIT_INVALID, EXIT_OK, RunResult, execute, run_config
from .studies import (
    DEFAULT_KGRID,
    ConvergenceReport,
    Row,
    StudyFailure,
    StudyInputs,
    StudyKind,
    default_inputs,
    random_potential,
    run_study,
)

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config",
    "parse_potential",
    "CSV_HEADER",
    "write_report",
    "EXIT_OK",
    "EXIT_FAIL",
    "EXIT_INVALID",
    "RunResult",
    "execute",
    "run_config",
    "DEFAULT_KGRID",
    "ConvergenceReport",
    "Row",
    "StudyFailure",
    "StudyInputs",
    "StudyKind",
    "default_inputs",
    "random_potential",
    "run_study",
]

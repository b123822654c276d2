"""Sweep harness: configuration, per-instance pipeline, CSV/SVG output, audits and CLI."""

from .config import ExperimentConfig, load_config
from .io import emit_csv, emit_plots, load_csv
from .pipeline import CSV_FIELDS, ResultRow, SweepResult, aggregate, run_instance, run_item, run_sweep

__all__ = [
    "CSV_FIELDS",
    "ExperimentConfig",
    "ResultRow",
    "SweepResult",
    "aggregate",
    "emit_csv",
    "emit_plots",
    "load_config",
    "load_csv",
    "run_instance",
    "run_item",
    "run_sweep",
]

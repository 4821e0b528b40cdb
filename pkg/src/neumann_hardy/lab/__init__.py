"""Config-driven experiments that exercise the library and emit JSON/CSV reports."""

from .config import ExperimentConfig
from .experiments import default_config, list_experiments, make_config, run_experiment
from .report import ExperimentReport, Metric, Table

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "Metric",
    "Table",
    "default_config",
    "list_experiments",
    "make_config",
    "run_experiment",
]

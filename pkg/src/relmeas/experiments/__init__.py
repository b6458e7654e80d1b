"""Configuration, orchestration and CSV output for the reproducible experiments."""
from .config import ExperimentConfig, load_config, parse_config
from .runners import (run_check, run_completeness, run_experiment, run_lightcone, run_smoothing,
                      run_unitarity_sweep)
from .table import ResultTable, emit_table, read_table

__all__ = ["ExperimentConfig", "load_config", "parse_config", "ResultTable", "emit_table",
           "read_table", "run_check", "run_completeness", "run_experiment", "run_lightcone",
           "run_smoothing", "run_unitarity_sweep"]

"""Experiment orchestration: configs, seeded sweeps, metrics and oracles."""

from .bias_study import BiasStudyResult, bias_study, solution_curve, solver_csv
from .config import ExperimentConfig, load_config
from .experiment import (
    ExperimentResult,
    RunResult,
    SummaryRow,
    finite_run,
    mountain_car_run,
    run_experiment,
    summarize_series,
)
from .metrics import nmse, nmse_quadratic
from .oracle import OracleResult, run_oracles

__all__ = [
    "BiasStudyResult", "ExperimentConfig", "ExperimentResult", "OracleResult", "RunResult", "SummaryRow",
    "bias_study", "finite_run", "load_config", "mountain_car_run", "nmse", "nmse_quadratic",
    "run_experiment", "run_oracles", "solution_curve", "solver_csv", "summarize_series",
]

"""Monte Carlo experiment harness: derived random streams, episode
runners, batched engines, regret aggregation, self-checks, and the CLI."""

from .checks import LpSuiteResult, run_lp_suite
from .config import build_instance, load_config, parse_config
from .engines import EpisodeBatch, run_batch
from .experiment import (ExperimentConfig, RegretReport, RegretRow,
                         report_to_csv, report_to_json, run_experiment,
                         write_report)
from .monotonicity import MonotonicityReport, check_bellman_monotonicity
from .runners import coupled_regret, run_knapsack
from .streams import derive_stream

__all__ = [
    "EpisodeBatch", "ExperimentConfig", "LpSuiteResult",
    "MonotonicityReport", "RegretReport", "RegretRow", "build_instance",
    "check_bellman_monotonicity", "coupled_regret", "derive_stream",
    "load_config", "parse_config", "report_to_csv", "report_to_json",
    "run_batch", "run_experiment", "run_knapsack", "run_lp_suite",
    "write_report",
]

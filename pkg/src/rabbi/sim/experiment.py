"""Monte Carlo regret experiments over a ladder of scaling factors.

A run crosses scaling factors with policies, simulates the requested
replications with per-replication derived streams, and aggregates regret
against the information-relaxed benchmark.  Output rows are a pure
function of the config, so repeated runs (at any thread count) produce
byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from math import sqrt
from typing import Optional

import numpy as np

from .. import knapsack, learning, pricing, probing
from . import engines
from .config import build_instance, load_config, run_settings

CSV_COLUMNS = ("setting", "policy", "k", "T", "B", "replications",
               "mean_regret", "sd_regret", "ci90_halfwidth", "mean_dp_gap",
               "mean_bellman_loss_steps", "mean_info_loss_steps", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    setting: str
    instance_params: dict
    scaling_factors: tuple
    replications: int
    master_seed: int
    policies: tuple = ("rabbi",)
    diagnostics: bool = False
    dp_oracle: bool = False
    output_path: str = "."

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.scaling_factors:
            raise ValueError("scaling factor list must be nonempty")
        if not self.policies:
            raise ValueError("policy list must be nonempty")

    @classmethod
    def from_params(cls, params: dict) -> "ExperimentConfig":
        knobs = run_settings(params)
        return cls(setting=knobs["setting"], instance_params=dict(params),
                   scaling_factors=knobs["scaling_factors"],
                   replications=knobs["replications"],
                   master_seed=knobs["master_seed"],
                   policies=knobs["policies"],
                   diagnostics=knobs["diagnostics"],
                   dp_oracle=knobs["dp_oracle"],
                   output_path=knobs["output_path"])

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        return cls.from_params(load_config(path))


@dataclass(frozen=True)
class RegretRow:
    setting: str
    policy: str
    k: int
    horizon: int
    budget: float
    replications: int
    mean_regret: float
    sd_regret: float
    ci90_halfwidth: float
    mean_dp_gap: Optional[float]
    mean_bellman_loss_steps: Optional[float]
    mean_info_loss_steps: Optional[float]
    seed: int
    # not part of the delimited schema; kept for in-process analysis
    mean_reward: float = 0.0
    sd_reward: float = 0.0
    mean_benchmark: float = 0.0

    def csv_values(self) -> tuple:
        return (self.setting, self.policy, self.k, self.horizon, self.budget,
                self.replications, self.mean_regret, self.sd_regret,
                self.ci90_halfwidth, self.mean_dp_gap,
                self.mean_bellman_loss_steps, self.mean_info_loss_steps,
                self.seed)


@dataclass(frozen=True)
class RegretReport:
    config: ExperimentConfig
    rows: tuple = field(default_factory=tuple)

    def row(self, k: int, policy: str) -> RegretRow:
        for r in self.rows:
            if r.k == k and r.policy == policy:
                return r
        raise KeyError(f"no row for k={k}, policy={policy!r}")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def report_to_csv(report: RegretReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.rows:
        lines.append(",".join(_format_cell(v) for v in row.csv_values()))
    return "\n".join(lines) + "\n"


def report_to_json(report: RegretReport) -> str:
    payload = [dict(zip(CSV_COLUMNS, row.csv_values())) for row in report.rows]
    return json.dumps(payload, indent=2) + "\n"


def _budget_of(instance) -> float:
    if isinstance(instance, pricing.PricingInstance):
        return float(instance.inventory)
    if isinstance(instance, probing.ProbingInstance):
        return float(instance.hire_budget)
    return float(instance.budget)


def _dp_value(instance) -> Optional[float]:
    if isinstance(instance, knapsack.KnapsackInstance):
        return knapsack.dp_online_value(instance)
    if isinstance(instance, pricing.PricingInstance):
        return pricing.dp_pricing_value(instance)[0]
    return None


def run_experiment(config: ExperimentConfig, threads: int = 1) -> RegretReport:
    """Simulate the full (k, policy) grid and aggregate regret rows."""
    rows = []
    for k in config.scaling_factors:
        instance = build_instance(config.instance_params, k)
        dp_value = _dp_value(instance) if config.dp_oracle else None
        for policy in config.policies:
            try:
                batch = engines.run_batch(instance, policy, config.master_seed,
                                          k, config.replications,
                                          threads=threads,
                                          diagnostics=config.diagnostics)
            except Exception as exc:
                raise RuntimeError(
                    f"simulation failed for setting={config.setting}, "
                    f"k={k}, policy={policy}: {exc}") from exc
            regrets = batch.regrets
            reps = config.replications
            sd = float(np.std(regrets, ddof=1)) if reps > 1 else 0.0
            mean_reward = float(np.mean(batch.rewards))
            rows.append(RegretRow(
                setting=config.setting,
                policy=policy,
                k=int(k),
                horizon=instance.horizon,
                budget=_budget_of(instance),
                replications=reps,
                mean_regret=float(np.mean(regrets)),
                sd_regret=sd,
                ci90_halfwidth=1.645 * sd / sqrt(reps),
                mean_dp_gap=None if dp_value is None else dp_value - mean_reward,
                mean_bellman_loss_steps=(float(np.mean(batch.bellman_counts))
                                         if batch.bellman_counts is not None else None),
                mean_info_loss_steps=(float(np.mean(batch.info_counts))
                                      if batch.info_counts is not None else None),
                seed=config.master_seed,
                mean_reward=mean_reward,
                sd_reward=(float(np.std(batch.rewards, ddof=1)) if reps > 1 else 0.0),
                mean_benchmark=float(np.mean(batch.benchmarks)),
            ))
    return RegretReport(config=config, rows=tuple(rows))


def write_report(report: RegretReport, out_dir: Optional[str] = None,
                 output_format: str = "csv", render_figure: bool = True) -> list:
    """Write the delimited table (and figure) for a finished run.

    `out_dir` defaults to the config's output_path.  Returns the list
    of paths written; the figure is skipped for empty reports.
    """
    if out_dir is None:
        out_dir = report.config.output_path
    os.makedirs(out_dir, exist_ok=True)
    base = f"{report.config.setting}_regret"
    paths = []
    if output_format == "json":
        path = os.path.join(out_dir, base + ".json")
        text = report_to_json(report)
    elif output_format == "csv":
        path = os.path.join(out_dir, base + ".csv")
        text = report_to_csv(report)
    else:
        raise ValueError(f"unknown output format {output_format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    paths.append(path)
    if render_figure and report.rows:
        from .figures import render_regret_figure
        fig_path = os.path.join(out_dir, base + ".png")
        render_regret_figure(report, fig_path)
        paths.append(fig_path)
    return paths

"""Per-step and per-episode records shared by the setting simulators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True, slots=True)
class StepRecord:
    """One simulated period.

    Diagnostic flags stay None unless the corresponding check was
    actually evaluated during the run.
    """

    t: int
    state: tuple
    input: object
    action: object
    reward: float
    satisfying: Optional[bool] = None
    excluded: Optional[bool] = None
    explore: Optional[bool] = None
    ranking_ok: Optional[bool] = None


@dataclass(frozen=True, slots=True)
class Trajectory:
    """One episode: its steps, realized reward, and the offline
    relaxation value computed from the logged randomness.

    bellman_loss_count sums `excluded` flags, info_loss_count sums
    `not satisfying` flags, each over the steps where the diagnostic
    ran.
    """

    steps: tuple
    total_reward: float
    offline_benchmark_value: float
    bellman_loss_count: int
    info_loss_count: int

    @property
    def regret(self) -> float:
        return self.offline_benchmark_value - self.total_reward

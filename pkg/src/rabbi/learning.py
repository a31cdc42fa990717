"""Online knapsack with unknown reward distributions.

The policy plugs empirical reward means into the fluid knapsack LP and
re-solves every period.  Under full feedback every arrival's reward is
observed; under censored feedback only accepted arrivals reveal theirs,
so an explorer schedule forces early accepts until each type has enough
samples.  True means and the separation between reward-to-weight ratios
exist only for diagnostics and the schedule builder; policies never
read them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import knapsack, lp
from .records import StepRecord, Trajectory


@dataclass(frozen=True)
class LearningInstance:
    """Types with positive weights and finite reward distributions.

    reward_support/reward_probs are (n, s) rows; pad short rows with
    probability zero.  feedback selects the default simulator mode.
    """

    weights: np.ndarray
    arrival_probs: np.ndarray
    reward_support: np.ndarray
    reward_probs: np.ndarray
    horizon: int
    budget: float
    feedback: str = "full"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.asarray(self.arrival_probs, dtype=float)
        rs = np.atleast_2d(np.asarray(self.reward_support, dtype=float))
        rp = np.atleast_2d(np.asarray(self.reward_probs, dtype=float))
        if w.ndim != 1 or (w <= 0).any():
            raise ValueError("weights must be strictly positive")
        if p.shape != w.shape or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("arrival_probs must be a distribution over types")
        if rs.shape != rp.shape or rs.shape[0] != w.size:
            raise ValueError("reward tables must be (n, support) and aligned")
        if (rp < 0).any() or np.abs(rp.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("reward_probs rows must be distributions")
        if self.horizon < 0 or self.budget < 0:
            raise ValueError("horizon and budget must be nonnegative")
        if self.feedback not in ("full", "censored"):
            raise ValueError(f"unknown feedback mode {self.feedback!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "arrival_probs", p)
        object.__setattr__(self, "reward_support", rs)
        object.__setattr__(self, "reward_probs", rp)
        cum = np.cumsum(rp, axis=1)
        cum[:, -1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def mean_rewards(self) -> np.ndarray:
        return (self.reward_support * self.reward_probs).sum(axis=1)

    @property
    def separation(self) -> float:
        """Minimum gap between distinct reward-to-weight ratios."""
        ratios = self.mean_rewards / self.weights
        if ratios.size < 2:
            return math.inf
        diffs = np.abs(ratios[:, None] - ratios[None, :])
        return float(diffs[~np.eye(ratios.size, dtype=bool)].min())

    def draw_rewards(self, rng, types) -> np.ndarray:
        """One realized reward per entry of `types`, one uniform block."""
        types = np.asarray(types, dtype=np.int64)
        u = rng.random(types.size)
        cols = np.array([int(np.searchsorted(self._cum[j], uu, side="right"))
                         for j, uu in zip(types, u)], dtype=np.int64)
        return self.reward_support[types, cols]


@dataclass(frozen=True)
class EmpiricalStats:
    """Observation counts and running means, one slot per type."""

    counts: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        m = np.asarray(self.means, dtype=float)
        if c.shape != m.shape or c.ndim != 1:
            raise ValueError("counts and means must be aligned 1-d arrays")
        if (c < 1).any():
            raise ValueError("every type needs at least its initial sample")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "means", m)


@dataclass(frozen=True)
class ExplorerSchedule:
    """Per-type sample quotas that force exploration accepts."""

    required_samples: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.required_samples, dtype=np.int64)
        if r.ndim != 1 or (r < 1).any():
            raise ValueError("quotas must be positive integers")
        object.__setattr__(self, "required_samples", r)


def knapsack_lp_solve(b: float, y, w, z):
    """Fluid knapsack optimum: accept vector and value.

    Greedy by y_j/w_j descending (ties to the lower index); types with
    nonpositive y are never accepted.
    """
    return knapsack.greedy_fractional(y, w, z, b)


def learning_rabbi_step(instance: LearningInstance, t: int, b: float,
                        stats: EmpiricalStats, j: int, mu) -> bool:
    """Accept/reject from the plug-in LP at the empirical means."""
    mu = np.asarray(mu, dtype=float)
    if instance.weights[j] > b:
        return False
    x, _ = knapsack_lp_solve(b, stats.means, instance.weights, mu)
    return bool(x[j] >= mu[j] - x[j])


def update_stats(stats: EmpiricalStats, j: int, reward: float) -> EmpiricalStats:
    """Fold one observed reward into the running mean for type j."""
    counts = stats.counts.copy()
    means = stats.means.copy()
    counts[j] += 1
    means[j] += (reward - means[j]) / counts[j]
    return EmpiricalStats(counts=counts, means=means)


def ranking(y, w) -> tuple:
    """Type order by y_j/w_j descending, ties to the lower index."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    ratios = y / w
    return tuple(sorted(range(y.size), key=lambda i: (-ratios[i], i)))


def naive_explorer_schedule(instance: LearningInstance, T: int) -> ExplorerSchedule:
    """Quotas sized so empirical ratio ranks settle: 8 ln T / (w_j d)^2
    samples per type, where d is the instance's ratio separation."""
    delta = instance.separation
    if delta <= 0.0:
        raise ValueError("explorer schedule needs strictly separated ratios")
    if math.isinf(delta):
        return ExplorerSchedule(np.ones(instance.n, dtype=np.int64))
    need = 8.0 * math.log(max(T, 1)) / (instance.weights * delta) ** 2
    return ExplorerSchedule(np.maximum(1, np.ceil(need)).astype(np.int64))


def bandits_rabbi_step(instance: LearningInstance, t: int, b: float,
                       stats: EmpiricalStats, j: int,
                       schedule: ExplorerSchedule):
    """(accept, explore) for one censored-feedback period.

    Below-quota types are force-accepted while they fit; otherwise the
    plug-in rule decides and the step counts as exploitation.
    """
    if stats.counts[j] < schedule.required_samples[j] \
            and instance.weights[j] <= b:
        return True, True
    return learning_rabbi_step(instance, t, b, stats, j, mu=t * instance.arrival_probs), False


def _acceptance_lp(instance: LearningInstance, b: float, z) -> lp.StandardLp:
    n = instance.n
    eye = np.eye(n)
    return lp.StandardLp(
        objective=np.concatenate([instance.mean_rewards, np.zeros(n)]),
        eq_matrix=np.hstack([eye, eye]),
        eq_rhs=np.asarray(z, dtype=float),
        ineq_matrix=np.concatenate([instance.weights, np.zeros(n)]).reshape(1, -1),
        ineq_rhs=[b],
    )


def _unit_possible(instance, b, z, j, accept: bool, x_greedy, value) -> bool:
    """Does some optimum of P[b, r, z] put a whole unit on the action?"""
    level = x_greedy[j] if accept else z[j] - x_greedy[j]
    if level >= 1.0 - lp.FEASIBILITY_TOL:
        return True
    program = _acceptance_lp(instance, b, z)
    direction = np.zeros(2 * instance.n)
    direction[j if accept else instance.n + j] = 1.0
    sel = lp.maximize_over_optima(program, direction, value)
    return sel.status == "optimal" and sel.value >= 1.0 - 1e-6


def run_learning(instance: LearningInstance, rng, mode: str = None,
                 schedule: ExplorerSchedule = None,
                 diagnostics: bool = False) -> Trajectory:
    """Simulate T periods of plug-in re-solving under a feedback mode.

    Stream order: one initial sample per type, then arrival uniforms,
    then reward uniforms.  A reward is drawn every period whether or
    not it is observed, so stream use is policy-independent.
    """
    mode = mode or instance.feedback
    if mode not in ("full", "censored"):
        raise ValueError(f"unknown feedback mode {mode!r}")
    T = instance.horizon
    n = instance.n
    w = instance.weights
    p = instance.arrival_probs
    init = instance.draw_rewards(rng, np.arange(n))
    p_cum = np.cumsum(p)
    p_cum[-1] = 1.0
    arrivals = np.searchsorted(p_cum, rng.random(T), side="right")
    rewards = instance.draw_rewards(rng, arrivals)
    if mode == "censored" and schedule is None:
        schedule = naive_explorer_schedule(instance, T)

    z_suffix = np.zeros((n, T + 1), dtype=np.int64)
    for col in range(T - 1, -1, -1):
        z_suffix[:, col] = z_suffix[:, col + 1]
        z_suffix[arrivals[col], col] += 1

    true_rank = ranking(instance.mean_rewards, w)
    stats = EmpiricalStats(counts=np.ones(n, dtype=np.int64), means=init)
    b = float(instance.budget)
    steps = []
    total = 0.0
    bell = info = 0
    for t in range(T, 0, -1):
        col = T - t
        j = int(arrivals[col])
        mu = t * p
        explore = None
        if mode == "full":
            accept = learning_rabbi_step(instance, t, b, stats, j, mu)
        else:
            accept, explore = bandits_rabbi_step(instance, t, b, stats, j,
                                                 schedule)
        realized = float(rewards[col])
        reward = realized if accept else 0.0
        total += reward
        b_start = b
        if accept:
            b -= float(w[j])

        satisfying = excluded = ranking_ok = None
        if diagnostics:
            ranking_ok = ranking(stats.means, w) == true_rank
            z_t = z_suffix[:, col].astype(float)
            x_g, value = knapsack_lp_solve(b_start, instance.mean_rewards,
                                           w, z_t)
            can_accept = w[j] <= b_start and _unit_possible(
                instance, b_start, z_t, j, True, x_g, value)
            can_reject = _unit_possible(instance, b_start, z_t, j, False,
                                        x_g, value)
            excluded = not (can_accept or can_reject)
            if excluded:
                satisfying = True
            else:
                satisfying = can_accept if accept else can_reject
            bell += excluded
            info += not satisfying
        steps.append(StepRecord(t=t, state=(t, b_start), input=j,
                                action=bool(accept), reward=reward,
                                satisfying=satisfying, excluded=excluded,
                                explore=explore, ranking_ok=ranking_ok))

        if mode == "full" or accept:
            stats = update_stats(stats, j, realized)

    _, benchmark = knapsack_lp_solve(float(instance.budget),
                                     instance.mean_rewards, w,
                                     z_suffix[:, 0].astype(float))
    return Trajectory(steps=tuple(steps), total_reward=total,
                      offline_benchmark_value=float(benchmark),
                      bellman_loss_count=bell, info_loss_count=info)

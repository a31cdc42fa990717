"""Online stochastic knapsack: accept or reject weighted, rewarded
arrivals under a budget.

The offline relaxation is a fractional knapsack over realized arrival
counts, solved in closed form by a bang-per-buck greedy.  The online
policy re-solves the same program with expected future counts and acts
on the arriving type's accept/reject scores.  Exact DP oracles are
provided at desk scale for regret measurement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp


@dataclass(frozen=True)
class KnapsackState:
    """Periods to go and remaining budget."""
    t: int
    b: float

    def __post_init__(self):
        if self.t < 0 or self.b < 0:
            raise ValueError("state components must be nonnegative")


@dataclass(frozen=True)
class ArrivalCounts:
    """Realized type counts over the remaining periods."""
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if (z < 0).any():
            raise ValueError("arrival counts must be nonnegative")
        object.__setattr__(self, "z", z)

    @property
    def total(self) -> float:
        return float(self.z.sum())


def _counts(z) -> np.ndarray:
    if isinstance(z, ArrivalCounts):
        return z.z
    return np.asarray(z, dtype=float)


@dataclass(frozen=True)
class KnapsackInstance:
    """Primitives (weights, reward means, arrival law, horizon, budget).

    arrival_probs is either one distribution over types (i.i.d. periods)
    or a (T, n) matrix whose row T-t applies to the period with t
    periods to go.
    """

    weights: np.ndarray
    rewards: np.ndarray
    arrival_probs: np.ndarray
    horizon: int
    budget: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        r = np.asarray(self.rewards, dtype=float)
        p = np.asarray(self.arrival_probs, dtype=float)
        if w.ndim != 1 or r.shape != w.shape:
            raise ValueError("weights and rewards must be 1-d arrays of equal length")
        if (w <= 0).any():
            raise ValueError("weights must be strictly positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if p.ndim == 1:
            rows = p.reshape(1, -1)
        elif p.ndim == 2:
            if p.shape[0] != self.horizon:
                raise ValueError("time-varying arrival_probs needs one row per period")
            rows = p
        else:
            raise ValueError("arrival_probs must be 1-d or 2-d")
        if rows.shape[1] != w.size:
            raise ValueError("arrival_probs length must match the type count")
        if (rows < 0).any() or np.abs(rows.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("each period's arrival probabilities must sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "arrival_probs", p)

    @property
    def n(self) -> int:
        return self.weights.size

    def arrival_probs_at(self, t: int) -> np.ndarray:
        """Distribution of the arrival in the period with t periods to go."""
        if self.arrival_probs.ndim == 1:
            return self.arrival_probs
        return self.arrival_probs[self.horizon - t]

    def mean_arrivals(self, t: int) -> np.ndarray:
        """Expected type counts over the remaining t periods."""
        if t < 0 or t > self.horizon:
            raise ValueError("t out of range")
        if self.arrival_probs.ndim == 1:
            return t * self.arrival_probs
        if t == 0:
            return np.zeros(self.n)
        return self.arrival_probs[self.horizon - t:].sum(axis=0)


def greedy_fractional(values, weights, caps, budget: float):
    """Fractional knapsack optimum by bang-per-buck greedy.

    Returns (accept vector, value).  Ratio ties go to the lower index;
    nonpositive values are never accepted.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    caps = np.asarray(caps, dtype=float)
    n = values.size
    ratios = values / weights
    order = sorted(range(n), key=lambda i: (-ratios[i], i))
    x = np.zeros(n)
    rem = float(budget)
    value = 0.0
    for j in order:
        if values[j] <= 0.0 or rem <= 0.0:
            break
        take = caps[j] if caps[j] * weights[j] <= rem else rem / weights[j]
        if take <= 0.0:
            continue
        x[j] = take
        value += values[j] * take
        rem -= weights[j] * take
    return x, value


def relaxed_value(instance: KnapsackInstance, state: KnapsackState, z) -> float:
    """Fractional relaxation over the remaining arrivals z, sum(z) = t."""
    z = _counts(z)
    if abs(z.sum() - state.t) > 1e-9:
        raise ValueError("counts must cover exactly the remaining periods")
    _, value = greedy_fractional(instance.rewards, instance.weights, z, state.b)
    return value


def relaxation_lp(instance: KnapsackInstance, b: float, z) -> lp.StandardLp:
    """The same relaxation as an explicit LP over (x_accept, x_reject)."""
    z = _counts(z)
    n = instance.n
    eye = np.eye(n)
    return lp.StandardLp(
        objective=np.concatenate([instance.rewards, np.zeros(n)]),
        eq_matrix=np.hstack([eye, eye]),
        eq_rhs=z,
        ineq_matrix=np.concatenate([instance.weights, np.zeros(n)]).reshape(1, -1),
        ineq_rhs=[b],
    )


def _integral_weights(weights) -> np.ndarray:
    w_int = np.rint(weights).astype(int)
    if np.abs(weights - w_int).max() > 1e-9 or (w_int < 1).any():
        raise ValueError("exact oracle needs positive integral weights")
    return w_int


def offline_ip_value(instance: KnapsackInstance, z, b: float) -> float:
    """Exact integer knapsack over realized counts, by budget-grid DP."""
    z = np.rint(_counts(z)).astype(int)
    w = _integral_weights(instance.weights)
    b_int = int(np.floor(b + 1e-9))
    zmax = int(z.max(initial=0))
    if instance.n * max(b_int, 1) * max(zmax, 1) > 1e7:
        raise ValueError("instance exceeds the exact-oracle scale guard")
    dp = np.zeros(b_int + 1)
    for j in range(instance.n):
        r = instance.rewards[j]
        if r <= 0.0:
            continue
        copies = min(int(z[j]), b_int // int(w[j]))
        for _ in range(copies):
            wj = w[j]
            np.maximum(dp[wj:], dp[:-wj] + r, out=dp[wj:])
    return float(dp[b_int])


def rabbi_action(instance: KnapsackInstance, state: KnapsackState, j: int, mu) -> bool:
    """Accept/reject the arriving type from re-solved fluid scores.

    Accept wins ties; an arrival that does not fit is always rejected.
    """
    mu = _counts(mu)
    if instance.weights[j] > state.b:
        return False
    x, _ = greedy_fractional(instance.rewards, instance.weights, mu, state.b)
    return bool(x[j] >= mu[j] - x[j])


def dp_online_value(instance: KnapsackInstance) -> float:
    """Exact optimal online expected value by backward induction."""
    w = _integral_weights(instance.weights)
    b_int = int(np.floor(instance.budget + 1e-9))
    if instance.horizon * (b_int + 1) * instance.n > 1e8:
        raise ValueError("instance exceeds the DP scale guard")
    values = np.zeros(b_int + 1)
    for t in range(1, instance.horizon + 1):
        p = instance.arrival_probs_at(t)
        nxt = np.zeros_like(values)
        for j in range(instance.n):
            if p[j] == 0.0:
                continue
            choice = values.copy()
            wj = int(w[j])
            if wj <= b_int:
                np.maximum(choice[wj:], instance.rewards[j] + values[:-wj],
                           out=choice[wj:])
            nxt += p[j] * choice
        values = nxt
    return float(values[b_int])


def rmax_bound(instance: KnapsackInstance) -> float:
    """Worst one-step compensation: displacing a unit of type i to force
    in a unit of type j costs at most w_i * r_j / w_j - r_i."""
    ratios = instance.rewards / instance.weights
    m = ratios[:, None] * instance.weights[None, :] - instance.rewards[None, :]
    return float(max(0.0, m.max()))

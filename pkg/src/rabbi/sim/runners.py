"""Scalar episode runners and the policy dispatcher.

The dispatcher maps any instance type to its simulator so the
experiment layer can treat all four settings uniformly.  Each runner
consumes its generator in a documented block order, which the
vectorized engines reproduce draw for draw.
"""

from __future__ import annotations

import numpy as np

from .. import knapsack, learning, pricing, probing
from .. import lp
from ..records import StepRecord, Trajectory


def _unit_action_possible(instance: knapsack.KnapsackInstance, b: float, z,
                          j: int, accept: bool, x_greedy) -> bool:
    """Does some optimum of the remaining-arrivals relaxation put a whole
    unit on accepting (or rejecting) type j?"""
    level = x_greedy[j] if accept else z[j] - x_greedy[j]
    if level >= 1.0 - lp.FEASIBILITY_TOL:
        return True
    program = knapsack.relaxation_lp(instance, b, z)
    value = float(np.dot(instance.rewards, x_greedy))
    direction = np.zeros(2 * instance.n)
    direction[j if accept else instance.n + j] = 1.0
    sel = lp.maximize_over_optima(program, direction, value)
    return sel.status == "optimal" and sel.value >= 1.0 - 1e-6


def run_knapsack(instance: knapsack.KnapsackInstance, rng,
                 diagnostics: bool = False) -> Trajectory:
    """Simulate the accept/reject policy for T periods.

    Stream order: one uniform per period for the arriving type.  The
    benchmark is the fractional relaxation at the realized counts.
    """
    T = instance.horizon
    n = instance.n
    u = rng.random(T)
    if instance.arrival_probs.ndim == 1:
        cum = np.cumsum(instance.arrival_probs)
        cum[-1] = 1.0
        arrivals = np.searchsorted(cum, u, side="right")
    else:
        cum = np.cumsum(instance.arrival_probs, axis=1)
        cum[:, -1] = 1.0
        arrivals = np.array([int(np.searchsorted(cum[i], u[i], side="right"))
                             for i in range(T)])
    indicators = np.zeros((n, T))
    if T:
        indicators[arrivals, np.arange(T)] = 1.0
    suffix = np.zeros((n, T + 1))
    suffix[:, 1:] = np.cumsum(indicators[:, ::-1], axis=1)

    b = float(instance.budget)
    total = 0.0
    bell = info = 0
    steps = []
    for t in range(T, 0, -1):
        j = int(arrivals[T - t])
        mu = instance.mean_arrivals(t)
        accept = knapsack.rabbi_action(instance, knapsack.KnapsackState(t, b), j, mu)
        reward = float(instance.rewards[j]) if accept else 0.0
        satisfying = excluded = None
        if diagnostics:
            z = suffix[:, t]
            x_g, _ = knapsack.greedy_fractional(instance.rewards,
                                                instance.weights, z, b)
            can_accept = (instance.weights[j] <= b and
                          _unit_action_possible(instance, b, z, j, True, x_g))
            can_reject = _unit_action_possible(instance, b, z, j, False, x_g)
            excluded = not (can_accept or can_reject)
            if excluded:
                satisfying = True
            else:
                satisfying = can_accept if accept else can_reject
            bell += excluded
            info += not satisfying
        steps.append(StepRecord(t=t, state=(t, b), input=j,
                                action="accept" if accept else "reject",
                                reward=reward, satisfying=satisfying,
                                excluded=excluded))
        total += reward
        if accept:
            b -= float(instance.weights[j])
    benchmark = knapsack.relaxed_value(instance,
                                       knapsack.KnapsackState(T, float(instance.budget)),
                                       suffix[:, T])
    return Trajectory(steps=tuple(steps), total_reward=total,
                      offline_benchmark_value=benchmark,
                      bellman_loss_count=bell, info_loss_count=info)


def coupled_regret(instance, rng, policy: str = "rabbi",
                   diagnostics: bool = False, **kwargs) -> Trajectory:
    """Run one episode of `policy` on `instance` under the stream `rng`.

    Dispatches on the instance type.  Extra keyword arguments are
    forwarded to the setting's runner (dp tables, explorer schedules).
    """
    if isinstance(instance, knapsack.KnapsackInstance):
        if policy != "rabbi":
            raise ValueError(f"unknown knapsack policy {policy!r}")
        return run_knapsack(instance, rng, diagnostics=diagnostics)
    if isinstance(instance, pricing.PricingInstance):
        return pricing.run_pricing(instance, rng, policy,
                                   diagnostics=diagnostics, **kwargs)
    if isinstance(instance, probing.ProbingInstance):
        if policy != "rabbi":
            raise ValueError(f"unknown probing policy {policy!r}")
        return probing.run_probing(instance, rng, diagnostics=diagnostics)
    if isinstance(instance, learning.LearningInstance):
        if policy == "rabbi":
            mode = instance.feedback
        elif policy in ("full", "censored"):
            mode = policy
        else:
            raise ValueError(f"unknown learning policy {policy!r}")
        return learning.run_learning(instance, rng, mode=mode,
                                     diagnostics=diagnostics, **kwargs)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")

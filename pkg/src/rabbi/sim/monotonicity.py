"""Exhaustive verification of the relaxation's one-step dominance.

On tiny integral instances every reachable (periods left, budget,
remaining counts, arrival) tuple is enumerated and the re-solved value
is compared against the best one-step continuation.  Dominance may fail
only where no optimal relaxation solution puts a whole unit on accepting
or rejecting the arrival, and then by at most the one-step compensation
bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .. import knapsack, learning, lp


@dataclass(frozen=True)
class Violation:
    t: int
    budget: int
    counts: tuple
    arrival: int
    lhs: float
    rhs: float
    excluded: bool

    @property
    def overshoot(self) -> float:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class MonotonicityReport:
    triples_checked: int
    violations: tuple
    rmax: float
    tolerance: float

    @property
    def excluded_violations(self) -> tuple:
        return tuple(v for v in self.violations if v.excluded)

    @property
    def stray_violations(self) -> tuple:
        """Violations on tuples where a unit action was available."""
        return tuple(v for v in self.violations if not v.excluded)

    @property
    def max_overshoot(self) -> float:
        return max((v.overshoot for v in self.violations), default=0.0)

    @property
    def passed(self) -> bool:
        if self.stray_violations:
            return False
        return self.max_overshoot <= self.rmax + 1e-9


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _as_integral(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    rounded = np.rint(arr)
    if np.abs(arr - rounded).max(initial=0.0) > 1e-9:
        raise ValueError(f"exhaustive check needs integral {what}")
    return rounded.astype(int)


def _relaxation_program(values, weights, b, z) -> lp.StandardLp:
    n = values.size
    eye = np.eye(n)
    return lp.StandardLp(
        objective=np.concatenate([values, np.zeros(n)]),
        eq_matrix=np.hstack([eye, eye]),
        eq_rhs=np.asarray(z, dtype=float),
        ineq_matrix=np.concatenate([weights, np.zeros(n)]).reshape(1, -1),
        ineq_rhs=[float(b)],
    )


def _unit_possible(values, weights, b, z, j, accept, x_greedy, value) -> bool:
    level = x_greedy[j] if accept else z[j] - x_greedy[j]
    if level >= 1.0 - lp.FEASIBILITY_TOL:
        return True
    program = _relaxation_program(values, weights, b, z)
    direction = np.zeros(2 * values.size)
    direction[j if accept else values.size + j] = 1.0
    sel = lp.maximize_over_optima(program, direction, value)
    return sel.status == "optimal" and sel.value >= 1.0 - 1e-6


def _problem_data(instance):
    if isinstance(instance, knapsack.KnapsackInstance):
        if instance.arrival_probs.ndim != 1:
            raise ValueError("exhaustive check supports stationary arrivals only")
        return instance.rewards, instance.weights, instance.horizon, instance.budget
    if isinstance(instance, learning.LearningInstance):
        return instance.mean_rewards, instance.weights, instance.horizon, instance.budget
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def compensation_bound(values, weights) -> float:
    """Largest one-step loss from forcing one unit in or out of a plan."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    m = (values / weights)[:, None] * weights[None, :] - values[None, :]
    return float(max(0.0, m.max()))


def check_bellman_monotonicity(instance, max_T: int = None,
                               tolerance: float = 1e-9,
                               perturb: float = 0.0,
                               max_triples: int = 1_000_000) -> MonotonicityReport:
    """Enumerate every (t, budget, counts, arrival) tuple and test

        phi(t, b, z) + perturb <= max_u { reward + phi(t-1, b', z - e_j) } + tol.

    `max_T` caps the periods-to-go range below the instance horizon.
    `perturb` exists to prove the checker can fail: shifting the left
    side up by more than the compensation bound must surface stray
    violations.  Works on accept/reject instances with integral weights
    and budget (knapsack, and reward-learning via its true means).
    """
    values, weights, horizon, budget = _problem_data(instance)
    if max_T is not None:
        horizon = min(horizon, int(max_T))
    w_int = _as_integral(weights, "weights")
    b_max = int(_as_integral([budget], "budget")[0])
    n = values.size

    total = sum(comb(t + n - 1, n - 1) for t in range(1, horizon + 1))
    total *= (b_max + 1) * n
    if total > max_triples:
        raise ValueError(f"{total} tuples exceed the enumeration guard")

    phi_cache = {}

    def phi(z: tuple, b: int):
        key = (z, b)
        hit = phi_cache.get(key)
        if hit is None:
            hit = knapsack.greedy_fractional(values, weights, np.array(z, dtype=float), float(b))
            phi_cache[key] = hit
        return hit

    checked = 0
    violations = []
    for t in range(1, horizon + 1):
        for z in _compositions(t, n):
            for b in range(b_max + 1):
                x_g, val = phi(z, b)
                for j in range(n):
                    if z[j] == 0:
                        continue
                    checked += 1
                    z_next = z[:j] + (z[j] - 1,) + z[j + 1:]
                    rhs = phi(z_next, b)[1]
                    if w_int[j] <= b:
                        take = values[j] + phi(z_next, b - w_int[j])[1]
                        rhs = max(rhs, take)
                    lhs = val + perturb
                    if lhs <= rhs + tolerance:
                        continue
                    z_arr = np.array(z, dtype=float)
                    can_accept = (weights[j] <= b and
                                  _unit_possible(values, weights, b, z_arr, j,
                                                 True, x_g, val))
                    can_reject = _unit_possible(values, weights, b, z_arr, j,
                                                False, x_g, val)
                    violations.append(Violation(t=t, budget=b, counts=z,
                                                arrival=j, lhs=lhs, rhs=rhs,
                                                excluded=not (can_accept or can_reject)))
    return MonotonicityReport(triples_checked=checked,
                              violations=tuple(violations),
                              rmax=compensation_bound(values, weights),
                              tolerance=tolerance)

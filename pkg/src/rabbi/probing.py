"""Online probing: arrivals carry a hidden sub-type that a probe can
reveal before the accept decision.

Each period has two stages: first choose accept / probe / reject for
the arriving public type; after a probe, accept or reject the revealed
sub-type.  The planning LP tracks both stages jointly through a
splitting constraint that routes probed mass across sub-types.  Two
variants: a probe budget, or a per-probe cost with unlimited probes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .records import StepRecord, Trajectory

ACCEPT, PROBE, REJECT = "accept", "probe", "reject"


@dataclass(frozen=True)
class ProbingInstance:
    """Public types j with sub-types k, unit weights throughout.

    rewards[j] must be strictly increasing with a positive top entry;
    probe_cost stays all-zero in the budgeted variant.
    """

    rewards: np.ndarray
    sub_probs: np.ndarray
    arrival_probs: np.ndarray
    horizon: int
    hire_budget: int
    probe_budget: int
    probe_cost: np.ndarray = None
    variant: str = "budgeted"

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.rewards, dtype=float))
        q = np.atleast_2d(np.asarray(self.sub_probs, dtype=float))
        p = np.asarray(self.arrival_probs, dtype=float)
        c = (np.zeros(r.shape[0]) if self.probe_cost is None
             else np.asarray(self.probe_cost, dtype=float))
        if r.shape != q.shape or p.shape != (r.shape[0],) or c.shape != p.shape:
            raise ValueError("rewards, sub_probs, arrival_probs shapes disagree")
        if (np.diff(r, axis=1) <= 0).any() or (r[:, -1] <= 0).any():
            raise ValueError("reward rows must increase strictly to a positive top")
        if (q < 0).any() or np.abs(q.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("sub_probs rows must be distributions")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("arrival_probs must be a distribution")
        if self.horizon < 0 or self.hire_budget < 0 or self.probe_budget < 0:
            raise ValueError("horizon and budgets must be nonnegative")
        if self.variant not in ("budgeted", "costed"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if (c < 0).any():
            raise ValueError("probe costs must be nonnegative")
        if self.variant == "budgeted" and (c != 0).any():
            raise ValueError("the budgeted variant takes zero probe costs")
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "sub_probs", q)
        object.__setattr__(self, "arrival_probs", p)
        object.__setattr__(self, "probe_cost", c)

    @property
    def n(self) -> int:
        return self.rewards.shape[0]

    @property
    def m(self) -> int:
        return self.rewards.shape[1]

    @property
    def mean_rewards(self) -> np.ndarray:
        """Blind-accept means, one per public type."""
        return (self.rewards * self.sub_probs).sum(axis=1)


@dataclass(frozen=True)
class ProbingState:
    """Residual budgets plus which first-stage action, if any, is
    pending its second stage."""

    b_h: int
    b_p: int
    stage_marker: str = "none"

    def __post_init__(self):
        if self.b_h < 0 or self.b_p < 0:
            raise ValueError("budgets must be nonnegative")
        if self.stage_marker not in ("none", ACCEPT, PROBE, REJECT):
            raise ValueError(f"bad stage marker {self.stage_marker!r}")


@dataclass(frozen=True)
class Layout:
    """Column indices of the probing LP variable blocks."""

    n: int
    m: int

    def accept(self, j: int) -> int:
        return j

    def probe(self, j: int) -> int:
        return self.n + j

    def reject(self, j: int) -> int:
        return 2 * self.n + j

    def sub_accept(self, j: int, k: int) -> int:
        return 3 * self.n + j * self.m + k

    def sub_reject(self, j: int, k: int) -> int:
        return 3 * self.n + self.n * self.m + j * self.m + k

    @property
    def width(self) -> int:
        return 3 * self.n + 2 * self.n * self.m


def layout(instance: ProbingInstance) -> Layout:
    return Layout(instance.n, instance.m)


def probing_lp_program(instance: ProbingInstance, b_h: float, b_p: float,
                       z) -> lp.StandardLp:
    """Two-stage planning LP over action summaries.

    Variables: blind accepts, probes, rejects per type, then accepts
    and rejects per (type, sub-type) after a probe.  The costed variant
    charges probes in the objective and has no probe-budget row.
    """
    z = np.asarray(z, dtype=float)
    n, m = instance.n, instance.m
    lay = layout(instance)
    w = lay.width
    obj = np.zeros(w)
    obj[:n] = instance.mean_rewards
    obj[n:2 * n] = -instance.probe_cost
    obj[3 * n:3 * n + n * m] = instance.rewards.ravel()

    cap = np.zeros(w)
    cap[:n] = 1.0
    cap[3 * n:3 * n + n * m] = 1.0
    ineq_rows = [cap]
    ineq_rhs = [b_h]
    if instance.variant == "budgeted":
        probes = np.zeros(w)
        probes[n:2 * n] = 1.0
        ineq_rows.append(probes)
        ineq_rhs.append(b_p)

    eq_rows = np.zeros((n + n * m, w))
    eq_rhs = np.zeros(n + n * m)
    for j in range(n):
        eq_rows[j, lay.accept(j)] = 1.0
        eq_rows[j, lay.probe(j)] = 1.0
        eq_rows[j, lay.reject(j)] = 1.0
        eq_rhs[j] = z[j]
        for k in range(m):
            row = n + j * m + k
            eq_rows[row, lay.sub_accept(j, k)] = 1.0
            eq_rows[row, lay.sub_reject(j, k)] = 1.0
            eq_rows[row, lay.probe(j)] = -instance.sub_probs[j, k]
    return lp.StandardLp(objective=obj, eq_matrix=eq_rows, eq_rhs=eq_rhs,
                         ineq_matrix=np.vstack(ineq_rows), ineq_rhs=ineq_rhs)


def probing_lp(instance: ProbingInstance, b_h: float, b_p: float,
               z) -> lp.LpSolution:
    """Solve the planning LP; solver failures surface as LpStatusError."""
    sol = lp.solve_lp(probing_lp_program(instance, b_h, b_p, z))
    if sol.status != "optimal":
        raise lp.LpStatusError(f"probing LP is {sol.status}")
    return sol


def _first_stage_action(instance, state, scores_a, scores_p, scores_r):
    can_accept = state.b_h >= 1
    can_probe = state.b_p >= 1 or instance.variant == "costed"
    best = REJECT
    best_score = scores_r
    if can_probe and scores_p >= best_score:
        best, best_score = PROBE, scores_p
    if can_accept and scores_a >= best_score:
        best = ACCEPT
    return best


def probing_rabbi_step(instance: ProbingInstance, state: ProbingState, t: int,
                       mu, j: int, k: int = None) -> str:
    """One policy decision from the re-solved planning LP.

    First stage (k None): argmax of the type's accept/probe/reject
    scores, ties accept > probe > reject, infeasible actions skipped.
    Second stage (k given, after a probe): accept vs reject scores of
    the revealed sub-type; the period-start probe budget is restored so
    both stages read the same period LP.
    """
    if k is not None and state.stage_marker != PROBE:
        raise ValueError("sub-type supplied outside a probe second stage")
    if k is None and state.stage_marker == PROBE:
        raise ValueError("probe second stage needs the revealed sub-type")
    lay = layout(instance)
    if k is None:
        sol = probing_lp(instance, state.b_h, state.b_p, mu)
        x = sol.primal
        return _first_stage_action(instance, state,
                                   x[lay.accept(j)], x[lay.probe(j)],
                                   x[lay.reject(j)])
    period_bp = state.b_p + 1 if instance.variant == "budgeted" else state.b_p
    sol = probing_lp(instance, state.b_h, period_bp, mu)
    x = sol.primal
    if state.b_h >= 1 and x[lay.sub_accept(j, k)] >= x[lay.sub_reject(j, k)]:
        return ACCEPT
    return REJECT


def probing_offline_relaxation(instance: ProbingInstance, state: ProbingState,
                               t: int, z_remaining, j: int = None,
                               k: int = None) -> float:
    """Relaxed value at a first- or second-stage state.

    stage none: the LP at (budgets, Z(t)).  After accept/reject the
    period's arrival is gone from z_remaining; the accept branch adds
    the blind mean, the probe branch (with the probe already paid)
    takes the better of accepting or rejecting the revealed sub-type.
    """
    z = np.asarray(z_remaining, dtype=float)
    marker = state.stage_marker
    if marker == "none":
        return probing_lp(instance, state.b_h, state.b_p, z).value
    tail = probing_lp(instance, state.b_h, state.b_p, z).value
    if marker == REJECT:
        return tail
    if marker == ACCEPT:
        return float(instance.mean_rewards[j]) + tail
    if k is None:
        raise ValueError("probe branch needs the revealed sub-type")
    if state.b_h >= 1:
        hired = probing_lp(instance, state.b_h - 1, state.b_p, z).value
        return max(float(instance.rewards[j, k]) + hired, tail)
    return tail


_CERT_TOL = 1e-6


def _max_over_optima(program: lp.StandardLp, value: float, idx: int) -> float:
    direction = np.zeros(program.n_vars)
    direction[idx] = 1.0
    sel = lp.maximize_over_optima(program, direction, value)
    if sel.status != "optimal":
        raise lp.LpStatusError(f"selection LP is {sel.status}")
    return float(sel.value)


def probing_exclusion_check(instance: ProbingInstance, solution: lp.LpSolution,
                            b_h: float, b_p: float, z, j: int,
                            k: int = None) -> bool:
    """True iff the step is excluded: no optimal plan routes a whole
    unit of the arrival to any action.

    Checks the given vertex first; only the candidates it leaves below
    1 get a selection LP.  A sub-type accept or reject at level 1
    already forces a probed unit through the splitting row, so the
    probe variable needs no separate certificate.
    """
    lay = layout(instance)
    candidates = [lay.accept(j), lay.reject(j)]
    if k is not None:
        candidates += [lay.sub_accept(j, k), lay.sub_reject(j, k)]
    pending = [idx for idx in candidates
               if solution.primal[idx] < 1.0 - lp.FEASIBILITY_TOL]
    if len(pending) < len(candidates):
        return False
    program = probing_lp_program(instance, b_h, b_p, z)
    for idx in pending:
        if _max_over_optima(program, solution.value, idx) >= 1.0 - _CERT_TOL:
            return False
    return True


def _action_variable(lay: Layout, j: int, k: int, first: str, second):
    if first == ACCEPT:
        return lay.accept(j)
    if first == REJECT:
        return lay.reject(j)
    return lay.sub_accept(j, k) if second == ACCEPT else lay.sub_reject(j, k)


def run_probing(instance: ProbingInstance, rng, diagnostics: bool = False) -> Trajectory:
    """Simulate T two-stage periods under the re-solving policy.

    Consumes two uniform blocks: arrival types, then sub-types.  The
    sub-type is drawn every period whether or not it is observed, so
    random-stream consumption does not depend on the actions taken.
    """
    T = instance.horizon
    p_cum = np.cumsum(instance.arrival_probs)
    p_cum[-1] = 1.0
    q_cum = np.cumsum(instance.sub_probs, axis=1)
    q_cum[:, -1] = 1.0
    arrivals = np.searchsorted(p_cum, rng.random(T), side="right")
    u_sub = rng.random(T)
    subtypes = np.array([int(np.searchsorted(q_cum[j], u, side="right"))
                         for j, u in zip(arrivals, u_sub)], dtype=np.int64)

    # realized remaining type counts, one column per period-start
    z_suffix = np.zeros((instance.n, T + 1), dtype=np.int64)
    for col in range(T - 1, -1, -1):
        z_suffix[:, col] = z_suffix[:, col + 1]
        z_suffix[arrivals[col], col] += 1

    b_h, b_p = instance.hire_budget, instance.probe_budget
    p = instance.arrival_probs
    steps = []
    total = 0.0
    bell = info = 0
    for t in range(T, 0, -1):
        col = T - t
        j = int(arrivals[col])
        k = int(subtypes[col])
        bh0, bp0 = b_h, b_p
        mu = t * p
        first = probing_rabbi_step(instance,
                                   ProbingState(b_h, b_p, "none"), t, mu, j)
        second = None
        reward = 0.0
        if first == ACCEPT:
            reward = float(instance.rewards[j, k])
            b_h -= 1
        elif first == PROBE:
            if instance.variant == "budgeted":
                b_p -= 1
            reward -= float(instance.probe_cost[j])
            second = probing_rabbi_step(instance,
                                        ProbingState(b_h, b_p, PROBE), t, mu,
                                        j, k)
            if second == ACCEPT:
                reward += float(instance.rewards[j, k])
                b_h -= 1
        total += reward

        satisfying = excluded = None
        if diagnostics:
            z_t = z_suffix[:, col]
            sol = probing_lp(instance, bh0, bp0, z_t)
            excluded = probing_exclusion_check(instance, sol, bh0, bp0, z_t,
                                               j, k)
            if excluded:
                satisfying = True
            else:
                idx = _action_variable(layout(instance), j, k, first, second)
                if sol.primal[idx] >= 1.0 - lp.FEASIBILITY_TOL:
                    satisfying = True
                else:
                    program = probing_lp_program(instance, bh0, bp0, z_t)
                    satisfying = _max_over_optima(program, sol.value,
                                                  idx) >= 1.0 - _CERT_TOL
            bell += excluded
            info += not satisfying
        steps.append(StepRecord(t=t, state=(bh0, bp0), input=(j, k),
                                action=(first, second), reward=reward,
                                satisfying=satisfying, excluded=excluded))

    benchmark = 0.0
    if T:
        benchmark = probing_lp(instance, instance.hire_budget,
                               instance.probe_budget, z_suffix[:, 0]).value
    return Trajectory(steps=tuple(steps), total_reward=total,
                      offline_benchmark_value=benchmark,
                      bellman_loss_count=bell, info_loss_count=info)

"""Dynamic pricing from a finite price menu under an inventory cap.

Each period one customer arrives, a menu price is posted, and a sale
occurs when the customer's valuation reaches the price.  The planning
relaxation is a two-constraint LP over how often to expose each price,
solved exactly in closed form.  The module provides the re-solving
policy, an exact DP oracle, a static-price baseline, the realized
acceptance-fraction process used by the offline benchmark, and the
selection program certifying satisfying actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .records import StepRecord, Trajectory


@dataclass(frozen=True)
class PricingInstance:
    """Price menu, finite valuation distribution, horizon, inventory.

    Prices must be strictly decreasing, so the acceptance
    probabilities q_i = Pr[V >= f_i] are nondecreasing.
    """

    prices: np.ndarray
    support: np.ndarray
    probabilities: np.ndarray
    horizon: int
    inventory: int

    def __post_init__(self):
        f = np.asarray(self.prices, dtype=float)
        v = np.asarray(self.support, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if f.ndim != 1 or f.size == 0:
            raise ValueError("prices must be a nonempty 1-d array")
        if not (np.diff(f) < 0).all():
            raise ValueError("prices must be strictly decreasing")
        if v.shape != p.shape or v.ndim != 1:
            raise ValueError("support and probabilities must match")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if self.horizon < 0 or self.inventory < 0:
            raise ValueError("horizon and inventory must be nonnegative")
        if self.inventory != int(self.inventory):
            raise ValueError("inventory must be an integer")
        object.__setattr__(self, "prices", f)
        object.__setattr__(self, "support", v)
        object.__setattr__(self, "probabilities", p)
        q = np.array([p[v >= price].sum() for price in f])
        cum = np.cumsum(p)
        cum[-1] = 1.0
        object.__setattr__(self, "_q", q)
        object.__setattr__(self, "_cum", cum)

    @property
    def m(self) -> int:
        return self.prices.size

    @property
    def acceptance_probs(self) -> np.ndarray:
        """q_i = Pr[V >= f_i], nondecreasing in i."""
        return self._q

    def draw_valuations(self, rng, count: int) -> np.ndarray:
        """count valuations from one block of uniforms (one rng call)."""
        u = rng.random(count)
        return self.support[np.searchsorted(self._cum, u, side="right")]


def pricing_lp_closed_form(prices, t: float, b: float, q):
    """Optimal price-exposure plan and its value.

    Solves max { (f*q)'x : q'x <= b, 1'x <= t, x >= 0 } exactly by
    enumerating basic feasible solutions of the two-constraint program.
    When the budget row cannot fill (b <= t*q_1) the top price takes
    everything; otherwise candidates are scanned in a canonical order
    (the pair straddling b/t, single-price plans, remaining pairs) with
    strict improvement, so ties resolve the same way on every run.
    """
    prices = np.asarray(prices, dtype=float)
    q = np.asarray(q, dtype=float)
    if prices.shape != q.shape or q.ndim != 1:
        raise ValueError("prices and q must be 1-d arrays of equal length")
    if (np.diff(q) < -1e-15).any():
        raise ValueError("q must be sorted nondecreasing")
    if (q < 0).any() or (q > 1).any():
        raise ValueError("q entries must lie in [0, 1]")
    if t < 0 or b < 0:
        raise ValueError("t and b must be nonnegative")
    m = q.size
    rates = prices * q
    tq = t * q
    x = np.zeros(m)
    if b <= tq[0]:
        if q[0] > 0.0:
            x[0] = b / q[0]
        return x, float(rates[0] * x[0])

    boundary = int(np.searchsorted(tq, b, side="left"))
    candidates = []
    if 0 < boundary < m:
        candidates.append((boundary - 1, boundary))
    candidates.extend((i,) for i in range(m))
    candidates.extend((i, j) for i in range(m) for j in range(i + 1, m)
                      if (i, j) != (boundary - 1, boundary))

    best_x = x
    best_value = 0.0
    for cand in candidates:
        if len(cand) == 1:
            i = cand[0]
            xi = t if q[i] == 0.0 else min(t, b / q[i])
            value = rates[i] * xi
            if value > best_value:
                best_x = np.zeros(m)
                best_x[i] = xi
                best_value = value
        else:
            i, j = cand
            denom = q[j] - q[i]
            if denom <= 0.0:
                continue
            xi = (tq[j] - b) / denom
            xj = (b - tq[i]) / denom
            if xi < 0.0 or xj < 0.0:
                continue
            value = rates[i] * xi + rates[j] * xj
            if value > best_value:
                best_x = np.zeros(m)
                best_x[i] = xi
                best_x[j] = xj
                best_value = value
    return best_x, float(best_value)


def exposure_lp(prices, t: float, b: float, q) -> lp.StandardLp:
    """The same exposure program as an explicit StandardLp."""
    prices = np.asarray(prices, dtype=float)
    q = np.asarray(q, dtype=float)
    return lp.StandardLp(
        objective=prices * q,
        ineq_matrix=np.vstack([q, np.ones_like(q)]),
        ineq_rhs=[b, t],
    )


def pricing_rabbi_step(instance: PricingInstance, t: int, b: float, q_bar):
    """Posted price index for one period, or None to halt when b = 0.

    Ties in the exposure plan go to the smallest index, hence the
    highest price.
    """
    if b <= 0:
        return None
    x, _ = pricing_lp_closed_form(instance.prices, t, b, q_bar)
    top = x.max()
    return int(np.argmax(x >= top - 1e-9 * (1.0 + abs(top))))


def offline_pricing_benchmark(instance: PricingInstance, y) -> float:
    """Root relaxation value at the realized acceptance fractions.

    y is the m x T indicator matrix with y[i, col] = 1 when the
    valuation in chronological period col reaches price i.
    """
    y = np.asarray(y, dtype=float)
    T = instance.horizon
    if y.shape != (instance.m, T):
        raise ValueError("indicator matrix must be m x T")
    if T == 0:
        return 0.0
    fractions = y.mean(axis=1)
    _, value = pricing_lp_closed_form(instance.prices, T, instance.inventory,
                                      fractions)
    return value


def dp_pricing_value(instance: PricingInstance):
    """Exact optimal online value and its argmax policy table.

    Returns (value, table) where table[t, b] is the 0-based price index
    posted with t periods to go and b units left (-1 where no decision
    exists).  Ties go to the smallest index.
    """
    T, B = instance.horizon, instance.inventory
    if T * max(B, 1) > 1e8:
        raise ValueError("instance exceeds the DP scale guard")
    f = instance.prices
    q = instance.acceptance_probs
    values = np.zeros(B + 1)
    table = np.full((T + 1, B + 1), -1, dtype=np.int64)
    for t in range(1, T + 1):
        if B >= 1:
            cand = q[:, None] * (f[:, None] + values[None, :-1]) \
                + (1.0 - q[:, None]) * values[None, 1:]
            table[t, 1:] = cand.argmax(axis=0)
            values[1:] = cand.max(axis=0)
    return float(values[B]), table


def _binomial_capped_mean(T: int, q: float, cap: int) -> float:
    """E[min(Binomial(T, q), cap)] computed from the exact pmf."""
    if cap <= 0 or q <= 0.0 or T == 0:
        return 0.0
    if q >= 1.0:
        return float(min(T, cap))
    lq, l1q = math.log(q), math.log1p(-q)
    lgT = math.lgamma(T + 1)
    total = 0.0
    for s in range(T + 1):
        logp = lgT - math.lgamma(s + 1) - math.lgamma(T - s + 1) \
            + s * lq + (T - s) * l1q
        total += min(s, cap) * math.exp(logp)
    return total


def static_price_baseline(instance: PricingInstance):
    """Best single posted price and its exact expected revenue.

    Picks the revenue-rate maximizer among prices whose expected demand
    fits the inventory; if none fits, the feasibility-capped revenue
    maximizer.  The value is f_j * E[min(Binomial(T, q_j), B)].
    """
    T, B = instance.horizon, instance.inventory
    f = instance.prices
    q = instance.acceptance_probs
    demand = T * q
    fits = demand <= B * (1.0 + 1e-12) + 1e-12
    if fits.any():
        scores = np.where(fits, f * q, -np.inf)
    else:
        scores = f * np.minimum(demand, B)
    j = int(np.argmax(scores))
    return j, f[j] * _binomial_capped_mean(T, float(q[j]), B)


def selection_program(prices, t: float, b: float, q_vec, target_value: float,
                      j: int) -> float:
    """Largest exposure of price j across optimal plans.

    Solves max x_j over plans achieving the exposure-program optimum
    target_value; a result >= 1 certifies that posting f_j is a
    satisfying action.
    """
    base = exposure_lp(prices, t, b, q_vec)
    direction = np.zeros(base.n_vars)
    direction[j] = 1.0
    sol = lp.maximize_over_optima(base, direction, target_value)
    if sol.status != "optimal":
        raise lp.LpStatusError(
            f"selection program is {sol.status}; target value unattainable")
    return float(sol.value)


@dataclass(frozen=True)
class AcceptanceMartingale:
    """Empirical acceptance fractions over the last t periods.

    Stores integer acceptance counts so the one-period-back recursion
    (t+1)Q(t+1) = tQ(t) + Y holds in exact arithmetic.
    """

    t: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if self.t < 0 or (c < 0).any() or (c > self.t).any():
            raise ValueError("counts must lie in [0, t]")
        if (np.diff(c) < 0).any():
            raise ValueError("acceptance counts must be nondecreasing")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_indicators(cls, y) -> "AcceptanceMartingale":
        y = np.asarray(y)
        return cls(t=y.shape[1], counts=y.sum(axis=1))

    @property
    def Q(self) -> np.ndarray:
        if self.t == 0:
            return np.zeros(self.counts.size)
        return self.counts / self.t

    def step(self, y_col) -> "AcceptanceMartingale":
        """Drop the current period's indicators from the window."""
        return AcceptanceMartingale(t=self.t - 1,
                                    counts=self.counts - np.asarray(y_col))


def run_pricing(instance: PricingInstance, rng, policy: str,
                dp_table=None, diagnostics: bool = False) -> Trajectory:
    """Simulate one episode under policy {rabbi, static, dp_table}.

    Valuations are drawn upfront as one uniform block.  Diagnostics
    evaluate, per step, the exclusion rule (t = 1 or fewer than 4 units
    left) and the satisfying-action certificate against the realized
    acceptance fractions; both are skipped when diagnostics is False.
    """
    T, B = instance.horizon, instance.inventory
    f = instance.prices
    vals = instance.draw_valuations(rng, T)
    y = (vals[None, :] >= f[:, None]).astype(np.int64)
    # suffix[:, col] counts acceptances from chronological col onward
    suffix = np.zeros((instance.m, T + 1), dtype=np.int64)
    if T:
        suffix[:, :-1] = np.cumsum(y[:, ::-1], axis=1)[:, ::-1]

    if policy == "static":
        static_j, _ = static_price_baseline(instance)
    elif policy == "dp_table":
        if dp_table is None:
            _, dp_table = dp_pricing_value(instance)
    elif policy != "rabbi":
        raise ValueError(f"unknown pricing policy {policy!r}")

    q = instance.acceptance_probs
    steps = []
    b = B
    total = 0.0
    bell = info = 0
    for t in range(T, 0, -1):
        col = T - t
        b_start = b
        if b <= 0:
            j = None
        elif policy == "rabbi":
            j = pricing_rabbi_step(instance, t, b, q)
        elif policy == "static":
            j = static_j
        else:
            j = int(dp_table[t, b])
        v = float(vals[col])
        reward = 0.0
        if j is not None and v >= f[j]:
            reward = float(f[j])
            b -= 1
        total += reward

        satisfying = excluded = None
        if diagnostics:
            excluded = t == 1 or b_start < 4
            if j is None:
                satisfying = True
            else:
                q_t = suffix[:, col] / t
                x_off, v_off = pricing_lp_closed_form(f, t, b_start, q_t)
                if x_off[j] >= 1.0 - 1e-9:
                    satisfying = True
                else:
                    sel = selection_program(f, t, b_start, q_t, v_off, j)
                    satisfying = sel >= 1.0 - 1e-6
            bell += excluded
            info += not satisfying
        steps.append(StepRecord(t=t, state=(t, b_start), input=v, action=j,
                                reward=reward, satisfying=satisfying,
                                excluded=excluded))
    return Trajectory(steps=tuple(steps), total_reward=total,
                      offline_benchmark_value=offline_pricing_benchmark(instance, y),
                      bellman_loss_count=bell, info_loss_count=info)

"""Batched episode simulation.

The scalar runners are the semantics; these engines replay many
replications at once and must produce bitwise-identical rewards and
benchmarks.  Each replication keeps its own derived stream and block
order, so results never depend on chunking or thread count.  Settings
or options without a batched path fall back to the scalar loop.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import knapsack, learning, pricing, probing
from .runners import coupled_regret
from .streams import derive_stream

_CHUNK_ENTRIES = 4_000_000  # uniforms held in memory at once


@dataclass(frozen=True)
class EpisodeBatch:
    """Per-replication outcomes for one (instance, policy) cell."""
    rewards: np.ndarray
    benchmarks: np.ndarray
    bellman_counts: Optional[np.ndarray] = None
    info_counts: Optional[np.ndarray] = None

    @property
    def regrets(self) -> np.ndarray:
        return self.benchmarks - self.rewards


def _chunks(replications: int, horizon: int):
    size = max(1, _CHUNK_ENTRIES // max(horizon, 1))
    return [(start, min(start + size, replications))
            for start in range(0, replications, size)]


def _integral_grid(instance) -> bool:
    w = np.asarray(instance.weights, dtype=float)
    b = float(instance.budget)
    return (np.abs(w - np.rint(w)).max(initial=0.0) <= 1e-9
            and abs(b - round(b)) <= 1e-9 and (np.rint(w) >= 1).all())


# -- knapsack ---------------------------------------------------------------

def _knapsack_decision_table(instance: knapsack.KnapsackInstance) -> np.ndarray:
    """accept[t, b, j], built from the same re-solved plans the scalar
    policy sees; valid because integral data keeps budgets on the grid."""
    T = instance.horizon
    B = int(round(float(instance.budget)))
    w = instance.weights
    r = instance.rewards
    accept = np.zeros((T + 1, B + 1, instance.n), dtype=bool)
    for t in range(1, T + 1):
        mu = instance.mean_arrivals(t)
        for b in range(B + 1):
            x, _ = knapsack.greedy_fractional(r, w, mu, float(b))
            accept[t, b] = (x >= mu - x) & (w <= b)
    return accept


def _knapsack_batch(instance, master_seed, k, start, stop):
    T, n = instance.horizon, instance.n
    count = stop - start
    cum = np.cumsum(instance.arrival_probs)
    cum[-1] = 1.0
    arrivals = np.empty((count, T), dtype=np.int64)
    for i in range(count):
        rng = derive_stream(master_seed, k, start + i)
        arrivals[i] = np.searchsorted(cum, rng.random(T), side="right")

    accept_table = _knapsack_table_cache(instance)
    w_int = np.rint(instance.weights).astype(np.int64)
    r = instance.rewards
    b = np.full(count, int(round(float(instance.budget))), dtype=np.int64)
    total = np.zeros(count)
    for t in range(T, 0, -1):
        j = arrivals[:, T - t]
        acc = accept_table[t][b, j]
        total += np.where(acc, r[j], 0.0)
        b -= np.where(acc, w_int[j], 0)

    bench = np.empty(count)
    for i in range(count):
        z = np.bincount(arrivals[i], minlength=n).astype(float)
        _, bench[i] = knapsack.greedy_fractional(r, instance.weights, z,
                                                 float(instance.budget))
    return total, bench


_TABLE_CACHE: dict = {}


def _cache_lookup(key_obj, tag, build):
    """One-slot cache keyed by object identity; holds a reference so the
    id cannot be recycled while the entry lives."""
    entry = _TABLE_CACHE.get(tag)
    if entry is None or entry[0] is not key_obj:
        _TABLE_CACHE[tag] = (key_obj, build())
        entry = _TABLE_CACHE[tag]
    return entry[1]


def _knapsack_table_cache(instance) -> np.ndarray:
    return _cache_lookup(instance, "knapsack",
                         lambda: _knapsack_decision_table(instance))


# -- pricing ----------------------------------------------------------------

def _pricing_rabbi_table(instance: pricing.PricingInstance) -> np.ndarray:
    T, B = instance.horizon, instance.inventory
    q = instance.acceptance_probs
    table = np.zeros((T + 1, B + 1), dtype=np.int64)
    for t in range(1, T + 1):
        for b in range(1, B + 1):
            table[t, b] = pricing.pricing_rabbi_step(instance, t, b, q)
    return table


def _pricing_table_cache(instance, policy):
    if policy == "rabbi":
        return _cache_lookup(instance, "pricing_rabbi",
                             lambda: _pricing_rabbi_table(instance))
    return _cache_lookup(instance, "pricing_dp",
                         lambda: pricing.dp_pricing_value(instance)[1])


def _pricing_batch(instance, policy, master_seed, k, start, stop):
    T, B = instance.horizon, instance.inventory
    f = instance.prices
    count = stop - start
    vals = np.empty((count, T))
    for i in range(count):
        rng = derive_stream(master_seed, k, start + i)
        vals[i] = instance.draw_valuations(rng, T)

    if policy == "static":
        static_j, _ = pricing.static_price_baseline(instance)
        table = None
    else:
        table = _pricing_table_cache(instance, policy)

    b = np.full(count, B, dtype=np.int64)
    total = np.zeros(count)
    for t in range(T, 0, -1):
        col = T - t
        active = b > 0
        if table is None:
            j = np.full(count, static_j, dtype=np.int64)
        else:
            j = table[t, np.maximum(b, 1)]
        sale = active & (vals[:, col] >= f[j])
        total += np.where(sale, f[j], 0.0)
        b -= sale

    bench = np.empty(count)
    for i in range(count):
        y = (vals[i][None, :] >= f[:, None]).astype(np.int64)
        bench[i] = pricing.offline_pricing_benchmark(instance, y)
    return total, bench


# -- reward learning --------------------------------------------------------

def _greedy_rows(means, weights, mu, rem):
    """greedy_fractional applied row-wise; identical take/update order."""
    count, n = means.shape
    rows = np.arange(count)
    order = np.argsort(-(means / weights), axis=1, kind="stable")
    x = np.zeros((count, n))
    rem = rem.copy()
    dead = np.zeros(count, dtype=bool)
    for rank in range(n):
        sel = order[:, rank]
        v = means[rows, sel]
        w = weights[sel]
        cap = mu[sel]
        dead |= (v <= 0.0) | (rem <= 0.0)
        take = np.where(cap * w <= rem, cap, rem / w)
        take = np.where(dead, 0.0, take)
        x[rows, sel] = take
        rem = rem - w * take
    return x


def _learning_batch(instance, mode, master_seed, k, start, stop):
    T, n = instance.horizon, instance.n
    w = instance.weights
    p = instance.arrival_probs
    count = stop - start
    rows = np.arange(count)

    p_cum = np.cumsum(p)
    p_cum[-1] = 1.0
    init = np.empty((count, n))
    arrivals = np.empty((count, T), dtype=np.int64)
    realized = np.empty((count, T))
    for i in range(count):
        rng = derive_stream(master_seed, k, start + i)
        init[i] = instance.draw_rewards(rng, np.arange(n))
        arrivals[i] = np.searchsorted(p_cum, rng.random(T), side="right")
        realized[i] = instance.draw_rewards(rng, arrivals[i])

    quota = None
    if mode == "censored":
        quota = learning.naive_explorer_schedule(instance, T).required_samples

    counts = np.ones((count, n), dtype=np.int64)
    means = init
    b = np.full(count, float(instance.budget))
    total = np.zeros(count)
    for t in range(T, 0, -1):
        col = T - t
        j = arrivals[:, col]
        wj = w[j]
        mu = t * p
        x = _greedy_rows(means, w, mu, b)
        plug = (x[rows, j] >= mu[j] - x[rows, j]) & (wj <= b)
        if quota is None:
            accept = plug
        else:
            explore = (counts[rows, j] < quota[j]) & (wj <= b)
            accept = explore | plug
        r_col = realized[:, col]
        total += np.where(accept, r_col, 0.0)
        b = b - np.where(accept, wj, 0.0)

        upd = slice(None) if mode == "full" else accept
        ru, ju = rows[upd], j[upd]
        counts[ru, ju] += 1
        means[ru, ju] += (r_col[upd] - means[ru, ju]) / counts[ru, ju]

    bench = np.empty(count)
    for i in range(count):
        z = np.bincount(arrivals[i], minlength=n).astype(float)
        _, bench[i] = learning.knapsack_lp_solve(float(instance.budget),
                                                 instance.mean_rewards, w, z)
    return total, bench


# -- dispatch ---------------------------------------------------------------

def _scalar_batch(instance, policy, master_seed, k, start, stop,
                  diagnostics, **kwargs):
    count = stop - start
    rewards = np.empty(count)
    bench = np.empty(count)
    bell = np.empty(count) if diagnostics else None
    info = np.empty(count) if diagnostics else None
    for i in range(count):
        rng = derive_stream(master_seed, k, start + i)
        try:
            traj = coupled_regret(instance, rng, policy,
                                  diagnostics=diagnostics, **kwargs)
        except Exception as exc:
            raise RuntimeError(f"replication {start + i} failed: {exc}") from exc
        rewards[i] = traj.total_reward
        bench[i] = traj.offline_benchmark_value
        if diagnostics:
            bell[i] = traj.bellman_loss_count
            info[i] = traj.info_loss_count
    return rewards, bench, bell, info


def _vectorized(instance, policy, diagnostics) -> bool:
    if diagnostics:
        return False
    if isinstance(instance, pricing.PricingInstance):
        return policy in ("rabbi", "static", "dp_table")
    if isinstance(instance, knapsack.KnapsackInstance):
        return (policy == "rabbi" and instance.arrival_probs.ndim == 1
                and _integral_grid(instance))
    if isinstance(instance, learning.LearningInstance):
        return policy in ("rabbi", "full", "censored")
    return False


def run_batch(instance, policy, master_seed, k, replications,
              threads: int = 1, diagnostics: bool = False,
              **kwargs) -> EpisodeBatch:
    """Simulate `replications` episodes of one policy on one instance.

    Replication i always uses derive_stream(master_seed, k, i), so the
    output is a pure function of those arguments regardless of the
    batching path, chunk boundaries, or `threads`.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    spans = _chunks(replications, instance.horizon)
    fast = _vectorized(instance, policy, diagnostics) and not kwargs

    if fast and isinstance(instance, knapsack.KnapsackInstance):
        _knapsack_table_cache(instance)  # build once, outside workers
        work = lambda span: _knapsack_batch(instance, master_seed, k, *span)
    elif fast and isinstance(instance, pricing.PricingInstance):
        if policy != "static":
            _pricing_table_cache(instance, policy)
        work = lambda span: _pricing_batch(instance, policy, master_seed, k, *span)
    elif fast and isinstance(instance, learning.LearningInstance):
        mode = instance.feedback if policy == "rabbi" else policy
        work = lambda span: _learning_batch(instance, mode, master_seed, k, *span)
    else:
        work = lambda span: _scalar_batch(instance, policy, master_seed, k,
                                          *span, diagnostics, **kwargs)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(span) for span in spans]

    rewards = np.concatenate([p[0] for p in parts])
    bench = np.concatenate([p[1] for p in parts])
    if diagnostics:
        bell = np.concatenate([p[2] for p in parts])
        info = np.concatenate([p[3] for p in parts])
        return EpisodeBatch(rewards, bench, bell, info)
    return EpisodeBatch(rewards, bench)

"""Plug-in LP policy, explorer schedule, and learning simulator tests."""

import numpy as np
import pytest

from rabbi import learning


def two_type_instance(T=10, B=5.0, feedback="full", w=(1.0, 1.0)):
    # means 1.5 and 1.0; with unit weights the ratio separation is 0.5
    return learning.LearningInstance(
        weights=w, arrival_probs=[0.5, 0.5],
        reward_support=[[1.0, 2.0], [0.5, 1.5]],
        reward_probs=[[0.5, 0.5], [0.5, 0.5]],
        horizon=T, budget=B, feedback=feedback)


class TestInstance:
    def test_mean_rewards_and_separation(self):
        inst = two_type_instance()
        np.testing.assert_allclose(inst.mean_rewards, [1.5, 1.0])
        assert inst.separation == pytest.approx(0.5)

    def test_single_type_separation_is_infinite(self):
        inst = learning.LearningInstance(
            weights=[1.0], arrival_probs=[1.0], reward_support=[[2.0, 4.0]],
            reward_probs=[[0.5, 0.5]], horizon=3, budget=2.0)
        assert inst.separation == np.inf

    def test_reward_rows_must_be_distributions(self):
        with pytest.raises(ValueError):
            learning.LearningInstance(
                weights=[1.0], arrival_probs=[1.0],
                reward_support=[[1.0, 2.0]], reward_probs=[[0.5, 0.6]],
                horizon=1, budget=1.0)


class TestKnapsackLpSolve:
    def test_zero_counts(self):
        x, value = learning.knapsack_lp_solve(2.0, [5.0, 3.0], [1.0, 2.0],
                                              [0.0, 0.0])
        assert value == 0.0 and (x == 0).all()

    def test_fractional_fill(self):
        x, value = learning.knapsack_lp_solve(2.0, [5.0, 3.0], [1.0, 2.0],
                                              [1.0, 3.0])
        np.testing.assert_allclose(x, [1.0, 0.5])
        assert value == pytest.approx(6.5)

    def test_negative_mean_never_accepted(self):
        x, value = learning.knapsack_lp_solve(5.0, [-1.0, 3.0], [1.0, 1.0],
                                              [2.0, 2.0])
        np.testing.assert_allclose(x, [0.0, 2.0])
        assert value == pytest.approx(6.0)


class TestLearningRabbiStep:
    def setup_method(self):
        self.inst = two_type_instance(T=4, B=2.0)
        self.stats = learning.EmpiricalStats(counts=[1, 1], means=[5.0, 3.0])

    def test_oversized_arrival_rejected(self):
        heavy = two_type_instance(T=4, B=2.0, w=(3.0, 1.0))
        assert learning.learning_rabbi_step(heavy, 4, 2.0, self.stats, 0,
                                            [2.0, 2.0]) is False

    def test_high_ratio_accepted(self):
        assert learning.learning_rabbi_step(self.inst, 4, 2.0, self.stats, 0,
                                            [2.0, 2.0]) is True

    def test_low_ratio_rejected(self):
        assert learning.learning_rabbi_step(self.inst, 4, 2.0, self.stats, 1,
                                            [2.0, 2.0]) is False

    def test_decisions_invariant_to_positive_scaling(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            n = int(rng.integers(1, 4))
            w = rng.uniform(0.5, 2.0, size=n)
            y = rng.uniform(-1.0, 5.0, size=n)
            z = rng.integers(0, 4, size=n).astype(float)
            b = float(rng.uniform(0.0, 4.0))
            scale = float(rng.uniform(0.1, 9.0))
            x1, _ = learning.knapsack_lp_solve(b, y, w, z)
            x2, _ = learning.knapsack_lp_solve(b, scale * y, w, z)
            np.testing.assert_array_equal(x1, x2)


class TestUpdateStats:
    def test_two_point_average(self):
        stats = learning.EmpiricalStats(counts=[1], means=[4.0])
        new = learning.update_stats(stats, 0, 6.0)
        assert new.counts[0] == 2 and new.means[0] == pytest.approx(5.0)
        assert stats.counts[0] == 1 and stats.means[0] == 4.0

    def test_identical_rewards_keep_mean(self):
        stats = learning.EmpiricalStats(counts=[3], means=[2.0])
        for _ in range(5):
            stats = learning.update_stats(stats, 0, 2.0)
        assert stats.means[0] == pytest.approx(2.0)

    def test_stream_average(self):
        stats = learning.EmpiricalStats(counts=[1], means=[0.0])
        for r in (1.0, 2.0, 3.0):
            stats = learning.update_stats(stats, 0, r)
        assert stats.counts[0] == 4
        assert stats.means[0] == pytest.approx(1.5)

    def test_untouched_entries(self):
        stats = learning.EmpiricalStats(counts=[1, 7], means=[4.0, 9.0])
        new = learning.update_stats(stats, 0, 6.0)
        assert new.counts[1] == 7 and new.means[1] == 9.0


class TestRanking:
    def test_single_type(self):
        assert learning.ranking([2.0], [1.0]) == (0,)

    def test_ratio_order(self):
        assert learning.ranking([5.0, 3.0], [1.0, 2.0]) == (0, 1)
        assert learning.ranking([3.0, 5.0], [1.0, 1.0]) == (1, 0)

    def test_ties_to_lower_index(self):
        assert learning.ranking([2.0, 2.0], [1.0, 1.0]) == (0, 1)


class TestExplorerSchedule:
    def test_horizon_one_floors_at_one(self):
        sched = learning.naive_explorer_schedule(two_type_instance(), 1)
        np.testing.assert_array_equal(sched.required_samples, [1, 1])

    def test_quota_arithmetic(self):
        inst = two_type_instance(w=(1.0, 2.0))
        # means (1.5, 1.0) over weights (1, 2): ratios 1.5 and 0.5, gap 1.0
        assert inst.separation == pytest.approx(1.0)
        inst2 = learning.LearningInstance(
            weights=[1.0, 2.0], arrival_probs=[0.5, 0.5],
            reward_support=[[1.0, 2.0], [1.5, 2.5]],
            reward_probs=[[0.5, 0.5], [0.5, 0.5]],
            horizon=100, budget=50.0)
        # ratios 1.5 and 1.0: separation 0.5
        assert inst2.separation == pytest.approx(0.5)
        sched = learning.naive_explorer_schedule(inst2, 100)
        np.testing.assert_array_equal(sched.required_samples, [148, 37])

    def test_zero_separation_refused(self):
        inst = learning.LearningInstance(
            weights=[1.0, 2.0], arrival_probs=[0.5, 0.5],
            reward_support=[[1.0, 3.0], [3.0, 5.0]],
            reward_probs=[[0.5, 0.5], [0.5, 0.5]],
            horizon=5, budget=2.0)
        assert inst.separation == 0.0
        with pytest.raises(ValueError):
            learning.naive_explorer_schedule(inst, 5)


class TestBanditsStep:
    def setup_method(self):
        self.inst = two_type_instance(T=10, B=5.0, feedback="censored")
        self.sched = learning.ExplorerSchedule(required_samples=[3, 3])

    def test_below_quota_explores(self):
        stats = learning.EmpiricalStats(counts=[1, 1], means=[0.0, 0.0])
        assert learning.bandits_rabbi_step(self.inst, 10, 5.0, stats, 0,
                                           self.sched) == (True, True)

    def test_quota_met_delegates(self):
        stats = learning.EmpiricalStats(counts=[3, 3], means=[1.4, 1.1])
        accept, explore = learning.bandits_rabbi_step(self.inst, 10, 5.0,
                                                      stats, 0, self.sched)
        want = learning.learning_rabbi_step(self.inst, 10, 5.0, stats, 0,
                                            10 * self.inst.arrival_probs)
        assert explore is False and accept == want

    def test_no_room_exploits_and_rejects(self):
        stats = learning.EmpiricalStats(counts=[1, 1], means=[9.0, 9.0])
        accept, explore = learning.bandits_rabbi_step(self.inst, 10, 0.5,
                                                      stats, 0, self.sched)
        assert (accept, explore) == (False, False)


class TestRunLearning:
    def test_zero_horizon(self):
        traj = learning.run_learning(two_type_instance(T=0, B=2.0),
                                     np.random.default_rng(0))
        assert traj.steps == () and traj.total_reward == 0.0

    def test_zero_budget_censored_never_accepts(self):
        inst = two_type_instance(T=6, B=0.0, feedback="censored")
        traj = learning.run_learning(inst, np.random.default_rng(1))
        assert traj.total_reward == 0.0
        assert all(s.action is False for s in traj.steps)

    def test_full_feedback_replay(self):
        inst = two_type_instance(T=12, B=4.0)
        traj = learning.run_learning(inst, np.random.default_rng(33))
        rng = np.random.default_rng(33)
        init = inst.draw_rewards(rng, np.arange(inst.n))
        p_cum = np.cumsum(inst.arrival_probs)
        p_cum[-1] = 1.0
        arrivals = np.searchsorted(p_cum, rng.random(12), side="right")
        rewards = inst.draw_rewards(rng, arrivals)
        stats = learning.EmpiricalStats(counts=np.ones(2, dtype=np.int64),
                                        means=init)
        b = 4.0
        total = 0.0
        for step, j, r in zip(traj.steps, arrivals, rewards):
            assert step.input == int(j)
            want = learning.learning_rabbi_step(inst, step.t, b, stats, int(j),
                                                step.t * inst.arrival_probs)
            assert step.action == want
            if want:
                total += r
                b -= inst.weights[j]
            stats = learning.update_stats(stats, int(j), float(r))
            # one observation per elapsed period plus the initial samples
            assert stats.counts.sum() == inst.n + (12 - step.t + 1)
        assert traj.total_reward == total

    def test_censored_replay_counts_accepts(self):
        inst = two_type_instance(T=15, B=6.0, feedback="censored")
        sched = learning.naive_explorer_schedule(inst, 15)
        traj = learning.run_learning(inst, np.random.default_rng(77),
                                     schedule=sched)
        rng = np.random.default_rng(77)
        init = inst.draw_rewards(rng, np.arange(inst.n))
        p_cum = np.cumsum(inst.arrival_probs)
        p_cum[-1] = 1.0
        arrivals = np.searchsorted(p_cum, rng.random(15), side="right")
        rewards = inst.draw_rewards(rng, arrivals)
        stats = learning.EmpiricalStats(counts=np.ones(2, dtype=np.int64),
                                        means=init)
        b = 6.0
        accepts = np.zeros(2, dtype=int)
        for step, j, r in zip(traj.steps, arrivals, rewards):
            accept, explore = learning.bandits_rabbi_step(inst, step.t, b,
                                                          stats, int(j), sched)
            assert step.action == accept and step.explore == explore
            if accept:
                accepts[j] += 1
                b -= inst.weights[j]
                stats = learning.update_stats(stats, int(j), float(r))
            np.testing.assert_array_equal(stats.counts - 1, accepts)

    def test_benchmark_uses_true_means_and_realized_counts(self):
        inst = two_type_instance(T=10, B=3.0)
        traj = learning.run_learning(inst, np.random.default_rng(4))
        z = np.zeros(2)
        for s in traj.steps:
            z[s.input] += 1
        _, want = learning.knapsack_lp_solve(3.0, inst.mean_rewards,
                                             inst.weights, z)
        assert traj.offline_benchmark_value == want

    def test_diagnostics_flags(self):
        inst = two_type_instance(T=10, B=3.0)
        traj = learning.run_learning(inst, np.random.default_rng(8),
                                     diagnostics=True)
        bell = sum(1 for s in traj.steps if s.excluded)
        info = sum(1 for s in traj.steps if s.satisfying is False)
        assert traj.bellman_loss_count == bell
        assert traj.info_loss_count == info
        for s in traj.steps:
            assert s.ranking_ok is not None
            assert s.satisfying is not None

    def test_full_mode_leaves_explore_unset(self):
        inst = two_type_instance(T=5, B=2.0)
        traj = learning.run_learning(inst, np.random.default_rng(2))
        assert all(s.explore is None for s in traj.steps)

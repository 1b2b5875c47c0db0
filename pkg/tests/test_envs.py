import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abq._validation import ValidationError
from abq.bootstrap import BootstrapScheme
from abq.envs import TASKS, MountainCarTask, RandomMdpSpec, make_task, random_mdp, random_mdp_with_info
from abq.envs.baird import expected_iteration_radius
from abq.envs import mountain_car as mc
from abq.mdp import exact_q_pi, stationary_distribution
from abq.solvers import solution_constant_lambda


class TestTwoState:
    def test_structure(self, two_state_task):
        t = two_state_task
        assert t.mdp.discount == 0.9
        np.testing.assert_array_equal(t.features.x.ravel(), [1, 1, 2, 2])
        np.testing.assert_array_equal(t.mdp.reward_mean, [[0, 0], [0, 1]])

    def test_importance_ratios(self, two_state_task):
        rho = two_state_task.pi.probs / two_state_task.mu.probs
        np.testing.assert_allclose(rho, [[1.0, 1.0], [1 / 9, 9.0]])

    def test_options(self):
        tab = make_task("two_state", tabular=True)
        assert tab.tabular and tab.features.n_features == 4
        on = make_task("two_state", on_policy=True)
        np.testing.assert_array_equal(on.mu.probs, on.pi.probs)
        with pytest.raises(ValidationError):
            make_task("two_state", seed=3)


class TestRandomMdp:
    def test_deterministic(self):
        a = random_mdp(RandomMdpSpec(6, 3, 4, seed=7))
        b = random_mdp(RandomMdpSpec(6, 3, 4, seed=7))
        np.testing.assert_array_equal(a[0].transition, b[0].transition)
        np.testing.assert_array_equal(a[3].x, b[3].x)
        c = random_mdp(RandomMdpSpec(6, 3, 4, seed=8))
        assert not np.array_equal(a[0].transition, c[0].transition)

    def test_defaults(self):
        spec = RandomMdpSpec()
        assert (spec.n_states, spec.n_actions, spec.n_features, spec.discount) == (100, 5, 40, 0.9)

    @given(st.integers(0, 10_000))
    def test_properties(self, seed):
        mdp, pi, mu, X = random_mdp(RandomMdpSpec(5, 2, 4, seed=seed))
        assert set(np.unique(X.x)) <= {0.0, 1.0}
        assert np.all((mdp.reward_mean >= 0) & (mdp.reward_mean < 1))
        d = stationary_distribution(mdp, mu).d
        assert np.linalg.matrix_rank((X.x.T * d) @ X.x) == 4

    def test_redraw_on_rank_deficiency(self):
        # Ten features over four pairs can never be full rank.
        with pytest.raises(RuntimeError):
            random_mdp(RandomMdpSpec(2, 2, 10, seed=0))
        _, redraws = random_mdp_with_info(RandomMdpSpec(2, 2, 2, seed=0))
        assert redraws >= 0

    def test_make_task_options(self):
        t = make_task("random_mdp", seed=3, n_states=4, n_actions=2, n_features=3, discount=0.5)
        assert t.mdp.n_states == 4 and t.mdp.discount == 0.5
        with pytest.raises(ValidationError):
            make_task("random_mdp", colour="red")

    def test_unknown_task(self):
        with pytest.raises(ValidationError):
            make_task("gridworld")
        assert set(TASKS) == {"two_state", "mountain_car", "baird", "random_mdp"}


class TestBaird:
    def test_layout(self):
        t = make_task("baird")
        assert t.mdp.n_states == 7 and t.features.n_features == 16
        np.testing.assert_array_equal(t.features(3, 1)[8:], [0, 0, 0, 2, 0, 0, 0, 1])
        np.testing.assert_array_equal(t.features(6, 0)[:8], [0, 0, 0, 0, 0, 0, 1, 2])
        np.testing.assert_array_equal(t.w0[:8], [1, 1, 1, 1, 1, 1, 10, 1])
        np.testing.assert_array_equal(exact_q_pi(t.mdp, t.pi), 0.0)

    def test_uniform_visitation(self):
        t = make_task("baird")
        d = stationary_distribution(t.mdp, t.mu).d.reshape(7, 2)
        np.testing.assert_allclose(d.sum(axis=1), 1 / 7, atol=1e-12)

    def test_uncorrected_iteration_unstable(self):
        t = make_task("baird")
        A = solution_constant_lambda(t.mdp, t.pi, t.mu, t.features, 0.0).A
        assert np.min(np.linalg.eigvals(A).real) < 0
        assert expected_iteration_radius(A, 0.01) > 1.0

    def test_abq_pivots(self):
        t = make_task("baird")
        s = BootstrapScheme.abq(1.0, t.mu, t.pi)
        # max(mu, pi) is 6/7 for dashed and 1 for solid.
        np.testing.assert_allclose(s.nu_table(t.mu, t.pi)[0], [7 / 6, 1.0])


class TestMountainCarDynamics:
    def test_step_by_hand(self):
        pos, vel, r, term = mc.mountain_car_step(-0.5, 0.0, 2)
        v = 0.001 - 0.0025 * np.cos(-1.5)
        assert (pos, vel) == pytest.approx((-0.5 + v, v))
        assert r == -1.0 and not term

    def test_velocity_clipped(self):
        _, vel, _, _ = mc.mountain_car_step(-0.5, 0.07, 2)
        assert vel == 0.07

    def test_left_wall(self):
        pos, vel, _, term = mc.mountain_car_step(-1.2, -0.05, 0)
        assert pos == -1.2 and vel == 0.0 and not term

    def test_goal(self):
        pos, _, _, term = mc.mountain_car_step(0.49, 0.05, 2)
        assert term and pos == 0.5

    def test_out_of_range(self):
        with pytest.raises(mc.OutOfRangeError):
            mc.mountain_car_step(0.6, 0.0, 1)
        with pytest.raises(mc.OutOfRangeError):
            mc.mountain_car_step(0.0, 0.1, 1)
        with pytest.raises(mc.OutOfRangeError):
            mc.mountain_car_step(0.0, 0.0, 3)

    def test_policies(self):
        mu_t, pi_t = mc.mountain_car_policies(0.0, 0.01)
        mu_a, pi_a = mc.mountain_car_policies(0.0, -0.01)
        np.testing.assert_allclose(mu_t, [1 / 300, 1 / 300, 298 / 300])
        np.testing.assert_allclose(pi_t, [0.1, 0.1, 0.8])
        np.testing.assert_allclose(mu_a, mu_t[::-1])
        np.testing.assert_allclose(pi_a, pi_t[::-1])
        # Zero velocity counts as moving away from the goal.
        np.testing.assert_allclose(mc.mountain_car_policies(0.0, 0.0)[1], pi_a)
        assert np.max(pi_t / mu_t) == pytest.approx(30.0)


class TestTileCoding:
    @given(st.floats(-1.2, 0.5), st.floats(-0.07, 0.07), st.integers(0, 2))
    def test_ten_ones_in_block(self, pos, vel, action):
        x = mc.tile_code(pos, vel, action)
        assert x.shape == (96,)
        assert x.sum() == 10
        block = x.reshape(3, 32)
        assert block[action].sum() == 10
        np.testing.assert_array_equal(mc.tile_code(pos, vel, action), x)

    def test_corners_differ(self):
        lo = mc.tile_code(-1.2, -0.07, 1)
        hi = mc.tile_code(0.5, 0.07, 1)
        assert not np.array_equal(lo, hi)

    def test_nearby_states_share_features(self):
        a = mc.tile_code(-0.5, 0.0, 0)
        b = mc.tile_code(-0.5 + 1e-4, 0.0, 0)
        assert a @ b >= 9

    def test_out_of_range(self):
        with pytest.raises(mc.OutOfRangeError):
            mc.tile_code(-1.3, 0.0, 0)


class TestMountainCarStreams:
    def test_deterministic_and_episodic(self):
        a = mc.behavior_stream(5, n_episodes=3)
        b = mc.behavior_stream(5, n_episodes=3)
        np.testing.assert_array_equal(a.pos, b.pos)
        np.testing.assert_array_equal(a.actions, b.actions)
        assert a.terminals.sum() == 3 and a.terminals[-1]
        assert np.all(a.rewards == -1.0)

    def test_transitions_follow_dynamics(self):
        s = mc.behavior_stream(1, n_steps=500)
        assert len(s) == 500
        for t in range(0, 500, 37):
            p, v, _, term = mc.mountain_car_step(s.pos[t], s.vel[t], s.actions[t])
            assert (p, v) == pytest.approx((s.next_pos[t], s.next_vel[t]))
            if not s.terminals[t]:
                assert not term

    def test_episode_starts(self):
        s = mc.behavior_stream(2, n_episodes=4)
        starts = np.concatenate([[0], s.episode_ends[:-1] + 1])
        assert np.all((s.pos[starts] >= -0.6) & (s.pos[starts] <= -0.4))
        assert np.all((np.abs(s.vel[starts]) >= 0.005) & (np.abs(s.vel[starts]) <= 0.02))

    def test_step_cap_ends_episode(self):
        s = mc.behavior_stream(3, n_episodes=2, step_cap=10, policy=np.full((2, 3), 1 / 3))
        assert len(s) == 20 and s.truncations == 2
        np.testing.assert_array_equal(s.episode_ends, [9, 19])

    def test_exactly_one_length(self):
        with pytest.raises(ValueError):
            mc.behavior_stream(0)

    def test_ground_truth_small(self):
        task = MountainCarTask(n_pairs=3, n_rollouts=4, selection_steps=4000)
        a = mc.ground_truth_pairs(task, seed=1)
        b = mc.ground_truth_pairs(task, seed=1)
        np.testing.assert_array_equal(a.q_hat, b.q_hat)
        assert a.returns.shape == (3, 4)
        assert np.all(a.q_hat < 0) and np.all(a.q_hat >= -1 / (1 - task.gamma))
        assert a.features().shape == (3, 96)
        assert make_task("mountain_car", n_pairs=3) == MountainCarTask(n_pairs=3)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abq.bootstrap import BootstrapScheme, bootstrap_matrix
from abq.envs import RandomMdpSpec, random_mdp
from abq.harness.metrics import nmse
from abq.mdp import FeatureMap, exact_q_pi, stationary_distribution, target_transition_matrix
from abq.solvers import (
    RankDeficientError,
    default_horizon,
    expected_update,
    mspbe,
    mspbe_context,
    mspbe_gradient,
    mspbe_quadratic,
    solution_abq,
    solution_constant_lambda,
    trace_expectation_matrix,
    truncated_return,
)
from abq.trajectory import sample_trajectory
from oracles import mspbe_by_projection, q_by_value_iteration


def instance(seed, n_states=4, n_actions=2, n_features=3):
    return random_mdp(RandomMdpSpec(n_states, n_actions, n_features, seed=seed))


def tabular(mdp):
    return FeatureMap.tabular(mdp.n_states, mdp.n_actions)


class TestSolutionMatrices:
    def test_fixed_point_residual(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        for lam in (0.0, 0.5, 1.0):
            sol = solution_constant_lambda(mdp, pi, mu, X, lam)
            assert sol.invertible
            assert np.max(np.abs(sol.A @ sol.w_inf - sol.b)) <= 1e-9 * (1 + np.max(np.abs(sol.b)))

    @pytest.mark.parametrize("lam", [0.0, 0.3, 0.7, 1.0])
    def test_tabular_recovers_q_pi(self, small_mdp, lam):
        mdp, pi, mu, _ = small_mdp
        sol = solution_constant_lambda(mdp, pi, mu, tabular(mdp), lam)
        np.testing.assert_allclose(sol.w_inf, exact_q_pi(mdp, pi), atol=1e-8)

    def test_lambda_zero_tabular_is_value_iteration_fixed_point(self, small_mdp):
        mdp, pi, mu, _ = small_mdp
        sol = solution_constant_lambda(mdp, pi, mu, tabular(mdp), 0.0)
        ref = q_by_value_iteration(mdp.transition, mdp.reward_mean, pi.probs, mdp.discount)
        np.testing.assert_allclose(sol.w_inf, ref, atol=1e-8)

    @pytest.mark.parametrize("zeta", [0.0, 0.25, 0.5, 0.9, 1.0])
    def test_abq_tabular_recovers_q_pi(self, small_mdp, zeta):
        mdp, pi, mu, _ = small_mdp
        sol = solution_abq(mdp, pi, mu, tabular(mdp), BootstrapScheme.abq(zeta, mu, pi))
        np.testing.assert_allclose(sol.w_inf, exact_q_pi(mdp, pi), atol=1e-8)

    def test_zeta_zero_equals_lambda_zero(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        a = solution_abq(mdp, pi, mu, X, BootstrapScheme.abq(0.0, mu, pi))
        b = solution_constant_lambda(mdp, pi, mu, X, 0.0)
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.b, b.b)

    @given(st.integers(0, 5000), st.floats(0.0, 1.0))
    def test_constant_scheme_matches(self, seed, lam):
        mdp, pi, mu, X = instance(seed)
        a = solution_abq(mdp, pi, mu, X, BootstrapScheme.constant(lam))
        b = solution_constant_lambda(mdp, pi, mu, X, lam)
        np.testing.assert_allclose(a.A, b.A, atol=1e-12)
        np.testing.assert_allclose(a.b, b.b, atol=1e-12)

    def test_singular_reported(self):
        mdp, pi, mu, X = instance(3)
        dup = FeatureMap(np.column_stack([X.x, X.x[:, 0]]))
        sol = solution_constant_lambda(mdp, pi, mu, dup, 0.5)
        assert not sol.invertible and sol.w_inf is None

    def test_two_state_curves(self, two_state_task):
        t = two_state_task
        q = exact_q_pi(t.mdp, t.pi)
        d = stationary_distribution(t.mdp, t.mu).d
        grid = np.linspace(0, 1, 11)
        q_curve = [nmse(solution_constant_lambda(t.mdp, t.pi, t.mu, t.features, v).w_inf, t.features, q, d)
                   for v in grid]
        z_curve = [nmse(solution_abq(t.mdp, t.pi, t.mu, t.features, BootstrapScheme.abq(v, t.mu, t.pi)).w_inf,
                        t.features, q, d) for v in grid]
        assert np.all(np.diff(q_curve) <= 0) and np.all(np.diff(z_curve) <= 0)
        assert q_curve[-1] < z_curve[-1] < z_curve[0]
        assert q_curve[0] == pytest.approx(z_curve[0], abs=1e-12)
        # Frozen values of this build's exact solver.
        assert q_curve[0] == pytest.approx(0.9371, abs=1e-4)
        assert z_curve[-1] == pytest.approx(0.1732, abs=1e-4)
        assert q_curve[-1] == pytest.approx(0.1277, abs=1e-4)


class TestMspbe:
    def scheme(self, t, zeta=0.6):
        return BootstrapScheme.abq(zeta, t.mu, t.pi)

    def test_zero_at_fixed_point(self, two_state_task):
        t = two_state_task
        s = self.scheme(t)
        w = solution_abq(t.mdp, t.pi, t.mu, t.features, s).w_inf
        assert mspbe(t.mdp, t.pi, t.mu, t.features, s, w) <= 1e-9

    def test_tabular_zero_at_q_pi(self, small_mdp):
        mdp, pi, mu, _ = small_mdp
        s = BootstrapScheme.abq(0.4, mu, pi)
        assert mspbe(mdp, pi, mu, tabular(mdp), s, exact_q_pi(mdp, pi)) <= 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_path(self, two_state_task, seed):
        t = two_state_task
        s = self.scheme(t)
        w = np.random.default_rng(seed).normal(size=1) * 5
        P = target_transition_matrix(t.mdp, t.pi)
        d = stationary_distribution(t.mdp, t.mu).d
        ref = mspbe_by_projection(t.features.x, d, P, t.mdp.rewards, t.mdp.discount,
                                  bootstrap_matrix(s, t.mu, t.pi).diag, w)
        assert mspbe(t.mdp, t.pi, t.mu, t.features, s, w) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    @given(st.integers(0, 5000), st.floats(0.0, 1.0))
    def test_dual_path_random(self, seed, zeta):
        mdp, pi, mu, X = instance(seed)
        s = BootstrapScheme.abq(zeta, mu, pi)
        w = np.random.default_rng(seed).normal(size=X.n_features)
        ref = mspbe_by_projection(X.x, stationary_distribution(mdp, mu).d, target_transition_matrix(mdp, pi),
                                  mdp.rewards, mdp.discount, bootstrap_matrix(s, mu, pi).diag, w)
        got = mspbe(mdp, pi, mu, X, s, w)
        assert got >= 0
        assert got == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_rank_deficient(self):
        mdp, pi, mu, X = instance(3)
        dup = FeatureMap(np.column_stack([X.x, X.x[:, 0]]))
        s = BootstrapScheme.abq(0.5, mu, pi)
        with pytest.raises(RankDeficientError, match="rank"):
            mspbe(mdp, pi, mu, dup, s, np.zeros(4))
        assert mspbe(mdp, pi, mu, dup, s, np.zeros(4), allow_singular=True) >= 0

    def test_quadratic_in_w(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        s = BootstrapScheme.abq(0.7, mu, pi)
        rng = np.random.default_rng(0)
        w0, direction = rng.normal(size=3), rng.normal(size=3)
        ts = np.array([-1.0, 0.5, 2.0])
        vals = [mspbe(mdp, pi, mu, X, s, w0 + t * direction) for t in ts]
        coef = np.polyfit(ts, vals, 2)
        t4 = 3.7
        assert np.polyval(coef, t4) == pytest.approx(mspbe(mdp, pi, mu, X, s, w0 + t4 * direction), rel=1e-9)

    def test_quadratic_coefficients(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        s = BootstrapScheme.abq(0.3, mu, pi)
        Q, q, c0 = mspbe_quadratic(mdp, pi, mu, X, s)
        w = np.array([0.3, -1.2, 2.0])
        assert w @ Q @ w - 2 * q @ w + c0 == pytest.approx(mspbe(mdp, pi, mu, X, s, w), rel=1e-9)

    def test_context_c_symmetric_psd(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        ctx = mspbe_context(mdp, pi, mu, X, BootstrapScheme.abq(0.3, mu, pi), np.zeros(3))
        d = stationary_distribution(mdp, mu).d
        np.testing.assert_allclose(ctx.C, (X.x.T * d) @ X.x, atol=1e-12)
        np.testing.assert_allclose(ctx.C, ctx.C.T)
        assert np.min(np.linalg.eigvalsh(ctx.C)) >= -1e-12


class TestGradient:
    def fd(self, t, s, w):
        g = np.empty_like(w)
        for i in range(w.size):
            h = 1e-6 * (1 + abs(w[i]))
            up, dn = w.copy(), w.copy()
            up[i] += h
            dn[i] -= h
            g[i] = (mspbe(t.mdp, t.pi, t.mu, t.features, s, up) - mspbe(t.mdp, t.pi, t.mu, t.features, s, dn)) / (2 * h)
        return g

    def test_finite_differences_random_mdp(self, small_mdp):
        from abq.envs import FiniteTask

        mdp, pi, mu, X = small_mdp
        t = FiniteTask("r", mdp, pi, mu, X)
        s = BootstrapScheme.abq(0.8, mu, pi)
        for seed in range(5):
            w = np.random.default_rng(seed).normal(size=3) * 3
            g = mspbe_gradient(mdp, pi, mu, X, s, w)
            np.testing.assert_allclose(self.fd(t, s, w), g, rtol=1e-5, atol=1e-5 * np.max(np.abs(g)))

    def test_zero_at_fixed_point(self, two_state_task):
        t = two_state_task
        s = BootstrapScheme.abq(0.9, t.mu, t.pi)
        w = solution_abq(t.mdp, t.pi, t.mu, t.features, s).w_inf
        assert np.max(np.abs(mspbe_gradient(t.mdp, t.pi, t.mu, t.features, s, w))) <= 1e-8

    def test_one_step_reduction(self, small_mdp):
        mdp, pi, mu, _ = small_mdp
        X = tabular(mdp)
        w = np.random.default_rng(2).normal(size=X.n_features)
        g = mspbe_gradient(mdp, pi, mu, X, BootstrapScheme.abq(0.0, mu, pi), w)
        sol = solution_constant_lambda(mdp, pi, mu, X, 0.0)
        C = (X.x.T * stationary_distribution(mdp, mu).d) @ X.x
        ref = -2 * sol.A.T @ np.linalg.solve(C, sol.b - sol.A @ w)
        np.testing.assert_allclose(g, ref, rtol=1e-9, atol=1e-12)

    def test_descent_converges(self, two_state_task):
        t = two_state_task
        s = BootstrapScheme.abq(0.5, t.mu, t.pi)
        target = solution_abq(t.mdp, t.pi, t.mu, t.features, s).w_inf
        Q, _, _ = mspbe_quadratic(t.mdp, t.pi, t.mu, t.features, s)
        step = 0.5 / np.max(np.linalg.eigvalsh(Q))
        w = np.array([10.0])
        for _ in range(5000):
            w = w - step * mspbe_gradient(t.mdp, t.pi, t.mu, t.features, s, w)
        np.testing.assert_allclose(w, target, atol=1e-8)


class TestExpectedUpdate:
    def test_equals_b_minus_aw(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        s = BootstrapScheme.abq(0.5, mu, pi)
        sol = solution_abq(mdp, pi, mu, X, s)
        w = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(expected_update(mdp, pi, mu, X, s, w), sol.b - sol.A @ w)
        np.testing.assert_allclose(expected_update(mdp, pi, mu, X, s, sol.w_inf), 0.0, atol=1e-10)

    def test_two_state_w_zero(self, two_state_task):
        t = two_state_task
        s = BootstrapScheme.abq(0.3, t.mu, t.pi)
        np.testing.assert_array_equal(expected_update(t.mdp, t.pi, t.mu, t.features, s, np.zeros(1)),
                                      solution_abq(t.mdp, t.pi, t.mu, t.features, s).b)

    @pytest.mark.parametrize("seed", range(10))
    def test_trace_matrix_recursion(self, seed):
        mdp, pi, mu, X = instance(seed, n_states=5)
        s = BootstrapScheme.abq(float(np.random.default_rng(seed).random()), mu, pi)
        E = trace_expectation_matrix(mdp, pi, mu, X, s)
        P = target_transition_matrix(mdp, pi)
        lam = bootstrap_matrix(s, mu, pi).diag
        g = mdp.discount
        resid = E - ((np.eye(len(lam)) - g * P) @ X.x + g * P @ (lam[:, None] * E))
        assert np.max(np.abs(resid)) <= 1e-10
        d = stationary_distribution(mdp, mu).d
        np.testing.assert_allclose((X.x.T * d) @ E, solution_abq(mdp, pi, mu, X, s).A, atol=1e-12)

    def test_trace_matrix_zeta_zero(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        E = trace_expectation_matrix(mdp, pi, mu, X, BootstrapScheme.abq(0.0, mu, pi))
        P = target_transition_matrix(mdp, pi)
        np.testing.assert_allclose(E, (np.eye(P.shape[0]) - mdp.discount * P) @ X.x, atol=1e-14)


class TestTruncatedReturn:
    def test_horizon_zero(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        traj = sample_trajectory(mdp, mu, 5, seed=0)
        w = np.array([0.5, -1.0, 2.0])
        s = BootstrapScheme.abq(0.5, mu, pi)
        x0 = X.x[traj.states[0] * 2 + traj.actions[0]]
        xbar = (pi.probs[traj.next_states[0]][:, None] * X.x.reshape(5, 2, 3)[traj.next_states[0]]).sum(0)
        delta = traj.rewards[0] + mdp.discount * w @ xbar - w @ x0
        assert truncated_return(traj, X, pi, mu, s, w, 0, 0, mdp.discount) == pytest.approx(delta + w @ x0)

    def test_gamma_zero(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        traj = sample_trajectory(mdp, mu, 20, seed=1)
        w = np.ones(3)
        s = BootstrapScheme.abq(1.0, mu, pi)
        one = truncated_return(traj, X, pi, mu, s, w, 2, 0, 0.0)
        assert truncated_return(traj, X, pi, mu, s, w, 2, 15, 0.0) == one
        assert one == pytest.approx(traj.rewards[2])

    @given(st.integers(0, 5000), st.floats(0.0, 1.0), st.sampled_from(["abq", "abtrace", "treebackup", "constant"]))
    def test_two_forms_agree(self, seed, z, variant):
        mdp, pi, mu, X = instance(seed)
        s = (BootstrapScheme.abq(z, mu, pi) if variant == "abq" else BootstrapScheme.constant(z)
             if variant == "constant" else BootstrapScheme(variant, zeta=z))
        traj = sample_trajectory(mdp, mu, 30, seed=seed)
        w = np.random.default_rng(seed).normal(size=3)
        a = truncated_return(traj, X, pi, mu, s, w, 3, 20, mdp.discount, form="nu_pi")
        b = truncated_return(traj, X, pi, mu, s, w, 3, 20, mdp.discount, form="lambda_rho")
        assert a == pytest.approx(b, abs=1e-12, rel=1e-12)

    def test_too_short(self, small_mdp):
        mdp, pi, mu, X = small_mdp
        traj = sample_trajectory(mdp, mu, 5, seed=0)
        with pytest.raises(ValueError, match="too short"):
            truncated_return(traj, X, pi, mu, 0.5, np.zeros(3), 2, 10, mdp.discount)

    def test_default_horizon(self, two_state_task):
        t = two_state_task
        s = BootstrapScheme.abq(0.5, t.mu, t.pi)
        H = default_horizon(t.mdp, t.pi, t.mu, s)
        k = t.mdp.discount * np.max(s.decay_table(t.mu, t.pi))
        assert k**H < 1e-10 <= k ** (H - 1)
        assert default_horizon(t.mdp, t.pi, t.mu, 0.0) == 0

"""Verification suite: sampled learner behaviour against exact model quantities.

Each check returns an :class:`OracleResult`; :func:`run_oracles` runs a set
of them from a config and the CLI exits nonzero if any fails.
"""

from dataclasses import dataclass, replace

import numpy as np

from .._validation import ValidationError
from ..agents import _kernels, learner_tables, offline_q_lambda_backward, offline_q_lambda_forward
from ..bootstrap import BootstrapScheme
from ..envs import RandomMdpSpec, make_task, random_mdp
from ..solvers import expected_update, mspbe, mspbe_context, mspbe_gradient, solution_abq
from ..trajectory import sample_trajectory

CHECKS = ("forward_backward", "expected_update", "gradient", "h_fixed_point")


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str
    value: float = float("nan")

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


# ---------------------------------------------------------------------------
# Forward / backward equivalence


def random_scheme(rng, mu, pi):
    """A bootstrapping scheme of random variant and random parameter."""
    variant = ("abq", "abtrace", "constant", "treebackup")[rng.integers(4)]
    value = float(rng.random())
    if variant == "abq":
        return BootstrapScheme.abq(value, mu, pi)
    if variant == "constant":
        return BootstrapScheme.constant(value)
    return BootstrapScheme(variant, zeta=value)


def forward_backward_gap(n_episodes=200, max_len=50, max_states=6, seed=0, alpha=0.1):
    """Largest ``|sum forward deltas - sum backward deltas|`` over random episodes.

    Each episode comes from a fresh random MDP (2-``max_states`` states,
    2-3 actions, 1-4 binary features), a random scheme, random weights and
    a random length; half of the episodes end in a terminal transition.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_episodes):
        n_s = int(rng.integers(2, max_states + 1))
        n_a = int(rng.integers(2, 4))
        n_f = int(rng.integers(1, min(4, n_s * n_a) + 1))
        spec = RandomMdpSpec(n_s, n_a, n_f, int(rng.integers(2**31)), float(rng.uniform(0.0, 0.99)))
        mdp, pi, mu, features = random_mdp(spec)
        scheme = random_scheme(rng, mu, pi)
        length = int(rng.integers(1, max_len + 1))
        traj = sample_trajectory(mdp, mu, length, int(rng.integers(2**31)))
        if rng.random() < 0.5:
            terms = traj.terminals.copy()
            terms[-1] = True
            traj = replace(traj, terminals=terms)
        w = rng.normal(size=n_f)
        fwd = offline_q_lambda_forward(traj, features, pi, mu, scheme, w, alpha, mdp.discount).sum(0)
        bwd = offline_q_lambda_backward(traj, features, pi, mu, scheme, w, alpha, mdp.discount).sum(0)
        worst = max(worst, float(np.max(np.abs(fwd - bwd))))
    return worst


def check_forward_backward(n_episodes=200, seed=0, tol=1e-10):
    gap = forward_backward_gap(n_episodes, seed=seed)
    return OracleResult("forward_backward", gap <= tol,
                        f"max gap {gap:.3g} over {n_episodes} episodes (tol {tol:g})", gap)


# ---------------------------------------------------------------------------
# Expected update


def sampled_update_mean(task, scheme, w, n_steps=1_000_000, seed=0, n_batches=1000, burn_in=1000):
    """Mean and standard error of ``delta_t e_t`` over a stationary run, ``w`` frozen.

    The standard error comes from ``n_batches`` contiguous batch means.
    """
    traj = sample_trajectory(task.mdp, task.mu, n_steps + burn_in, seed)
    tables = learner_tables(scheme, task.pi, task.mu, task.features)
    batches = _kernels.backward_update_batches(
        tables.X, tables.xbar, tables.decay, tables.n_actions, traj.states, traj.actions,
        traj.rewards, traj.next_states, traj.terminals, task.mdp.discount,
        np.asarray(w, dtype=float), burn_in, n_batches)
    return batches.mean(0), batches.std(0, ddof=1) / np.sqrt(n_batches)


def check_expected_update(task, scheme, w, n_steps=1_000_000, seed=0, n_se=3.0, label=""):
    mean, se = sampled_update_mean(task, scheme, w, n_steps, seed)
    exact = expected_update(task.mdp, task.pi, task.mu, task.features, scheme, w)
    z = np.abs(mean - exact) / se
    name = f"expected_update{label}"
    return OracleResult(name, bool(np.all(z <= n_se)),
                        f"max |sampled - (b - Aw)| = {float(np.max(z)):.2f} SE (limit {n_se:g})",
                        float(np.max(z)))


# ---------------------------------------------------------------------------
# MSPBE gradient


def finite_difference_gradient(task, scheme, w, allow_singular=False):
    """Central differences of the MSPBE with step ``1e-6 (1 + |w_i|)``."""
    w = np.asarray(w, dtype=float)
    grad = np.empty_like(w)
    for i in range(w.size):
        step = 1e-6 * (1.0 + abs(w[i]))
        up, down = w.copy(), w.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (mspbe(task.mdp, task.pi, task.mu, task.features, scheme, up, allow_singular)
                   - mspbe(task.mdp, task.pi, task.mu, task.features, scheme, down, allow_singular)) / (2 * step)
    return grad


def gradient_errors(task, scheme, n_points=20, seed=0, scale=5.0):
    """Relative FD error at ``n_points`` random weights and ``|grad J(w_inf)|``.

    The relative error is ``max_i |fd_i - grad_i| / max_i |grad_i|``.
    """
    rng = np.random.default_rng(seed)
    n = task.features.n_features
    rel = []
    for _ in range(n_points):
        w = rng.normal(scale=scale, size=n)
        g = mspbe_gradient(task.mdp, task.pi, task.mu, task.features, scheme, w)
        fd = finite_difference_gradient(task, scheme, w)
        rel.append(float(np.max(np.abs(fd - g)) / max(float(np.max(np.abs(g))), 1e-300)))
    sol = solution_abq(task.mdp, task.pi, task.mu, task.features, scheme)
    at_fix = float(np.max(np.abs(mspbe_gradient(task.mdp, task.pi, task.mu, task.features, scheme,
                                                 sol.w_inf)))) if sol.invertible else float("nan")
    return max(rel), at_fix


def check_gradient(task, scheme, n_points=20, seed=0, rtol=1e-5, fixed_tol=1e-8, label=""):
    rel, at_fix = gradient_errors(task, scheme, n_points, seed)
    ok = rel <= rtol and at_fix <= fixed_tol
    return OracleResult(f"gradient{label}", bool(ok),
                        f"max relative FD error {rel:.2e} (tol {rtol:g}); |grad J(w_inf)| = {at_fix:.2e} "
                        f"(tol {fixed_tol:g})", rel)


# ---------------------------------------------------------------------------
# Correction-weight fixed point


def h_iteration(task, scheme, w, n_steps=1_000_000, seed=0, beta_power=0.7):
    """Final ``h`` of ``h += beta_t (delta e - (h.x) x)`` with ``w`` frozen.

    ``beta_t = 1 / t**beta_power``; the run starts from the stationary
    distribution with ``h = 0``.
    """
    traj = sample_trajectory(task.mdp, task.mu, n_steps, seed)
    tables = learner_tables(scheme, task.pi, task.mu, task.features)
    n = task.features.n_features
    w = np.array(w, dtype=float)
    h, e = np.zeros(n), np.zeros(n)
    _kernels.run_dense(tables.X, tables.xbar, tables.xtilde, tables.decay, tables.n_actions,
                       traj.states, traj.actions, traj.rewards, traj.next_states, traj.terminals,
                       task.mdp.discount, 0.0, 0.0, 1.0, float(beta_power), 0.0, True, w, h, e,
                       np.zeros((n, n)), np.zeros(n), 0.0, 0, np.empty(0))
    return h


def check_h_fixed_point(task, scheme, w, n_steps=1_000_000, n_chains=30, seed=0, n_se=3.0, label=""):
    """Mean final ``h`` over independent chains against ``C^{-1} g``."""
    finals = np.array([h_iteration(task, scheme, w, n_steps, seed + k) for k in range(n_chains)])
    mean = finals.mean(0)
    se = finals.std(0, ddof=1) / np.sqrt(n_chains)
    ctx = mspbe_context(task.mdp, task.pi, task.mu, task.features, scheme, w)
    target = np.linalg.solve(ctx.C, ctx.g)
    z = np.abs(mean - target) / se
    return OracleResult(f"h_fixed_point{label}", bool(np.all(z <= n_se)),
                        f"max |mean h - C^-1 g| = {float(np.max(z)):.2f} SE over {n_chains} chains "
                        f"(limit {n_se:g})", float(np.max(z)))


# ---------------------------------------------------------------------------
# Config-driven suite


def run_oracles(doc, seed=None):
    """Run the checks named in ``doc["checks"]`` (default: all).

    Recognised keys: ``task``, ``task_options``, ``variant`` (default
    ``"abq"``), ``zeta`` (scalar or list), ``n_steps``, ``n_chains``,
    ``n_episodes``, ``n_points``, ``seed``.
    """
    doc = dict(doc)
    seed = int(doc.get("seed", 0) if seed is None else seed)
    checks = doc.get("checks", list(CHECKS))
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ValidationError(f"unknown oracle checks {sorted(unknown)}; expected {CHECKS}")
    task = make_task(doc.get("task", "two_state"), **doc.get("task_options", {}))
    if not hasattr(task, "mdp"):
        raise ValidationError("oracle checks need a finite task")
    zetas = doc.get("zeta", [0.25, 0.75])
    zetas = zetas if isinstance(zetas, list) else [zetas]
    variant = doc.get("variant", "abq")
    n_steps = int(doc.get("n_steps", 1_000_000))
    rng = np.random.default_rng(seed)
    results = []
    if "forward_backward" in checks:
        results.append(check_forward_backward(int(doc.get("n_episodes", 200)), seed))
    for z in zetas:
        scheme = BootstrapScheme.from_config({"variant": variant, "zeta": z, "lambda": z}, task.mu, task.pi)
        label = f"[{variant}={z:g}]"
        w = rng.normal(size=task.features.n_features)
        if "expected_update" in checks:
            results.append(check_expected_update(task, scheme, w, n_steps, seed, label=label))
        if "gradient" in checks:
            results.append(check_gradient(task, scheme, int(doc.get("n_points", 20)), seed, label=label))
        if "h_fixed_point" in checks:
            results.append(check_h_fixed_point(task, scheme, w, n_steps, int(doc.get("n_chains", 30)),
                                               seed, label=label))
    return results


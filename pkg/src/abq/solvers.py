"""Exact linear-algebra solutions for multi-step off-policy evaluation.

All quantities are built from the model (transition kernel, policies,
features), never from samples, and serve as ground truth for the learners.
The central objects are

* ``A = X^T D (I - gamma P Lambda)^{-1} (I - gamma P) X``
* ``b = X^T D (I - gamma P Lambda)^{-1} r``

with ``P`` the target pair-transition matrix, ``D`` the behavior stationary
distribution as a diagonal, and ``Lambda`` the diagonal bootstrapping
matrix. A constant ``lambda`` is the special case ``Lambda = lambda I``.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ValidationError, check_scalar
from .bootstrap import BootstrapScheme, bootstrap_matrix
from .mdp import stationary_distribution, target_transition_matrix

COND_LIMIT = 1e12
HORIZON_TOL = 1e-10
HORIZON_CAP = 10_000


class RankDeficientError(np.linalg.LinAlgError):
    """``C = X^T D X`` is singular, so the projection is not unique."""


@dataclass(frozen=True)
class SolutionMatrices:
    A: np.ndarray
    b: np.ndarray
    invertible: bool
    w_inf: np.ndarray = None
    cond: float = np.inf


@dataclass(frozen=True)
class MspbeContext:
    """Ingredients of the MSPBE and its gradient at a given weight vector."""

    C: np.ndarray
    H: np.ndarray
    g: np.ndarray


def _X(features):
    return np.asarray(getattr(features, "x", features), dtype=float)


def expected_features(features, pi, weights=None):
    """Per-state expectation ``sum_a w(s,a) pi(a|s) x(s,a)``, shape ``(S, n)``.

    With ``weights=None`` this is the target-policy expected feature ``xbar``.
    """
    X = _X(features)
    probs = np.asarray(getattr(pi, "probs", pi), dtype=float)
    n_s, n_a = probs.shape
    coef = probs if weights is None else probs * np.asarray(weights, dtype=float).reshape(n_s, n_a)
    return np.einsum("sa,san->sn", coef, X.reshape(n_s, n_a, -1))


def _lambda_diag(scheme, mu, pi, n_pairs):
    if isinstance(scheme, BootstrapScheme):
        return bootstrap_matrix(scheme, mu, pi).diag
    lam = check_scalar(scheme, "lambda", 0.0, 1.0)
    return np.full(n_pairs, lam)


class _Model:
    """Cached dense pieces for one (mdp, pi, mu, features, Lambda)."""

    def __init__(self, mdp, pi, mu, features, scheme):
        self.gamma = mdp.discount
        self.X = _X(features)
        if self.X.shape[0] != mdp.n_pairs:
            raise ValidationError("feature matrix needs one row per state-action pair")
        self.P = target_transition_matrix(mdp, pi)
        self.d = stationary_distribution(mdp, mu).d
        self.r = mdp.rewards
        self.lam = _lambda_diag(scheme, mu, pi, mdp.n_pairs)
        n = mdp.n_pairs
        self.I = np.eye(n)
        # (I - gamma P Lambda): scale columns of P by lambda.
        self.M = self.I - self.gamma * self.P * self.lam[None, :]
        self.XtD = self.X.T * self.d[None, :]

    def solve(self, rhs):
        return np.linalg.solve(self.M, rhs)

    def E(self):
        return self.solve((self.I - self.gamma * self.P) @ self.X)

    def A_b(self):
        Er = self.solve(np.column_stack([(self.I - self.gamma * self.P) @ self.X, self.r]))
        return self.XtD @ Er[:, :-1], self.XtD @ Er[:, -1]

    def C(self):
        return self.XtD @ self.X

    def H(self):
        return self.XtD @ self.solve(self.P @ (self.X * (1.0 - self.lam)[:, None]))


def _finish(A, b):
    cond = float(np.linalg.cond(A)) if A.size else np.inf
    invertible = bool(np.isfinite(cond) and cond < COND_LIMIT)
    w_inf = np.linalg.solve(A, b) if invertible else None
    return SolutionMatrices(A, b, invertible, w_inf, cond)


def solution_constant_lambda(mdp, pi, mu, features, lam):
    """Matrices of the off-policy Q(lambda) solution with constant ``lam``."""
    return _finish(*_Model(mdp, pi, mu, features, float(lam)).A_b())


def solution_abq(mdp, pi, mu, features, scheme):
    """Matrices of the solution for an action-dependent ``scheme``."""
    return _finish(*_Model(mdp, pi, mu, features, scheme).A_b())


def mspbe_context(mdp, pi, mu, features, scheme, w):
    m = _Model(mdp, pi, mu, features, scheme)
    A, b = m.A_b()
    return MspbeContext(m.C(), m.H(), b - A @ np.asarray(w, dtype=float))


def _c_inv_g(C, g, allow_singular):
    rank = np.linalg.matrix_rank(C)
    if rank < C.shape[0]:
        if not allow_singular:
            raise RankDeficientError(
                f"C = X^T D X has rank {rank} < {C.shape[0]} features; features are linearly "
                "dependent under d_mu")
        # g lies in range(C), so the pseudo-inverse gives the exact projection.
        return np.linalg.pinv(C) @ g
    return np.linalg.solve(C, g)


def mspbe(mdp, pi, mu, features, scheme, w, allow_singular=False):
    """``J(w) = g^T C^{-1} g``, the squared projected Bellman error under ``d_mu``."""
    ctx = mspbe_context(mdp, pi, mu, features, scheme, w)
    return float(max(ctx.g @ _c_inv_g(ctx.C, ctx.g, allow_singular), 0.0))


def mspbe_gradient(mdp, pi, mu, features, scheme, w, allow_singular=False):
    """Gradient of :func:`mspbe`: ``-2 (g - gamma H^T C^{-1} g)``."""
    ctx = mspbe_context(mdp, pi, mu, features, scheme, w)
    y = _c_inv_g(ctx.C, ctx.g, allow_singular)
    return -2.0 * (ctx.g - mdp.discount * ctx.H.T @ y)


def mspbe_quadratic(mdp, pi, mu, features, scheme, allow_singular=False):
    """Coefficients ``(Q, q, c0)`` with ``J(w) = w^T Q w - 2 q^T w + c0``.

    Lets learners track the MSPBE every step at ``O(n^2)`` cost.
    """
    m = _Model(mdp, pi, mu, features, scheme)
    A, b = m.A_b()
    C = m.C()
    Cinv = np.linalg.pinv(C) if allow_singular else np.linalg.inv(C)
    if not allow_singular and np.linalg.matrix_rank(C) < C.shape[0]:
        raise RankDeficientError("C is rank-deficient")
    return A.T @ Cinv @ A, A.T @ Cinv @ b, float(b @ Cinv @ b)


def expected_update(mdp, pi, mu, features, scheme, w):
    """Expected per-step backward-view update ``b - A w`` (step size omitted)."""
    sol = solution_abq(mdp, pi, mu, features, scheme) if isinstance(scheme, BootstrapScheme) \
        else solution_constant_lambda(mdp, pi, mu, features, scheme)
    return sol.b - sol.A @ np.asarray(w, dtype=float)


def trace_expectation_matrix(mdp, pi, mu, features, scheme):
    """``E = (I - gamma P Lambda)^{-1} (I - gamma P) X``; ``X^T D E = A``."""
    return _Model(mdp, pi, mu, features, scheme).E()


# ---------------------------------------------------------------------------
# Sampled returns


def _step_quantities(traj, features, pi, mu, scheme, form):
    X = _X(features)
    probs = np.asarray(pi.probs)
    n_a = probs.shape[1]
    sa = traj.states * n_a + traj.actions
    x = X[sa]
    xbar = expected_features(X, pi)[traj.next_states]
    xbar[traj.terminals] = 0.0
    mu_p = np.asarray(mu.probs)
    if isinstance(scheme, BootstrapScheme):
        lam_tab = scheme.lambda_table(mu, pi)
        decay_tab = scheme.decay_table(mu, pi)
    else:
        lam_tab = np.full(probs.shape, float(scheme))
        decay_tab = lam_tab * probs / np.where(mu_p > 0, mu_p, np.inf)
    if form == "nu_pi":
        c = decay_tab[traj.states, traj.actions]
    elif form == "lambda_rho":
        rho = probs[traj.states, traj.actions] / mu_p[traj.states, traj.actions]
        c = lam_tab[traj.states, traj.actions] * rho
    else:
        raise ValueError(f"unknown return form {form!r}")
    return x, xbar, c


def default_horizon(mdp, pi, mu, scheme):
    """Smallest ``H`` with ``(gamma * max lambda*rho)^H < 1e-10``, capped at 1e4.

    The maximum runs over pairs the behavior policy can take.
    """
    mu_p = np.asarray(mu.probs)
    if isinstance(scheme, BootstrapScheme):
        decay = scheme.decay_table(mu, pi)
    else:
        decay = float(scheme) * np.asarray(pi.probs) / np.where(mu_p > 0, mu_p, 1.0)
    k = mdp.discount * float(np.max(decay[mu_p > 0]))
    if k == 0:
        return 0
    if k >= 1:
        return HORIZON_CAP
    return min(HORIZON_CAP, int(np.ceil(np.log(HORIZON_TOL) / np.log(k))))


def truncated_return(traj, features, pi, mu, scheme, w, t, horizon, gamma, form="nu_pi"):
    """Partial multi-step return from time ``t`` summed up to ``n = t + horizon``.

    ``H_t = w^T x_t + sum_n gamma^(n-t) prod_{i=t+1..n} c_i delta_n`` where
    ``c_i = nu_i pi_i`` (``form="nu_pi"``) or ``lambda_i rho_i``
    (``form="lambda_rho"``); both weightings are equal by construction.
    The sum also stops at the end of the episode containing ``t``.
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    end = t + horizon
    if end >= len(traj):
        raise ValueError(f"trajectory of length {len(traj)} too short for t={t}, horizon={horizon}")
    x, xbar, c = _step_quantities(traj[t:end + 1], features, pi, mu, scheme, form)
    w = np.asarray(w, dtype=float)
    r = traj.rewards[t:end + 1]
    terms = traj.terminals[t:end + 1]
    total = w @ x[0]
    weight = 1.0
    for k in range(end - t + 1):
        if k > 0:
            weight *= gamma * c[k]
        delta = r[k] + gamma * (w @ xbar[k]) - w @ x[k]
        total += weight * delta
        if terms[k]:
            break
    return float(total)

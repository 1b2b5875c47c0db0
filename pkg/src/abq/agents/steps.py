"""Single-transition updates for ABQ, AB-Trace, Tree Backup and GQ.

These are the reference per-step implementations. Bulk runs go through the
compiled loop in ``_kernels``; tests check the two agree step for step.
"""

from dataclasses import dataclass, replace

import numpy as np

from .._validation import ValidationError
from ..bootstrap import BootstrapScheme
from ..solvers import expected_features

XTILDE_FORMS = ("lambda", "nu")


class DivergenceError(FloatingPointError):
    """Weights became non-finite or exceeded the divergence bound."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"weights diverged at step {step}")


@dataclass(frozen=True)
class LearnerState:
    w: np.ndarray
    h: np.ndarray
    e: np.ndarray
    alpha: float
    beta: float = 0.0
    t: int = 0

    @classmethod
    def zeros(cls, n_features, alpha, beta=0.0, w0=None):
        w = np.zeros(n_features) if w0 is None else np.array(w0, dtype=float)
        return cls(w, np.zeros(n_features), np.zeros(n_features), alpha, beta)

    def reset_trace(self):
        return replace(self, e=np.zeros_like(self.e))


@dataclass(frozen=True)
class Transition:
    """One observed step ``(S_t, A_t, R_{t+1}, S_{t+1})``."""

    s: int
    a: int
    reward: float
    s_next: int
    terminal: bool = False

    @classmethod
    def from_trajectory(cls, traj, t):
        return cls(int(traj.states[t]), int(traj.actions[t]), float(traj.rewards[t]),
                   int(traj.next_states[t]), bool(traj.terminals[t]))


@dataclass(frozen=True)
class LearnerTables:
    """Per-pair and per-state arrays that fully determine a learner's update."""

    X: np.ndarray
    xbar: np.ndarray
    xtilde: np.ndarray
    decay: np.ndarray
    n_actions: int
    correction: bool = True


def learner_tables(scheme, pi, mu, features, xtilde_form="lambda", correction=True):
    """Precompute ``x``, ``xbar``, ``xtilde`` and trace decay ``nu * pi``.

    ``xtilde_form="lambda"`` weights next-state features by
    ``lambda(s,a) pi(a|s)``, which matches the ``H`` matrix of the MSPBE
    gradient. ``"nu"`` uses ``nu(s,a) pi(a|s)`` instead.
    """
    if xtilde_form not in XTILDE_FORMS:
        raise ValueError(f"xtilde_form must be one of {XTILDE_FORMS}")
    X = np.ascontiguousarray(getattr(features, "x", features), dtype=float)
    n_actions = pi.probs.shape[1]
    if X.shape[0] != pi.probs.size:
        raise ValidationError("feature rows do not match the number of state-action pairs")
    weights = scheme.lambda_table(mu, pi) if xtilde_form == "lambda" else scheme.nu_table(mu, pi)
    xtilde = expected_features(X, pi, np.where(np.isfinite(weights), weights, 0.0))
    return LearnerTables(X, np.ascontiguousarray(expected_features(X, pi)), np.ascontiguousarray(xtilde),
                         scheme.decay_table(mu, pi).reshape(-1), n_actions, correction)


def _check_behavior(tr, mu):
    if mu is not None and mu.probs[tr.s, tr.a] <= 0:
        raise ValidationError(f"action {tr.a} in state {tr.s} has zero behavior probability")


def linear_step(state, tr, tables, gamma):
    """Apply the shared gradient-corrected trace update for one transition."""
    sa = tr.s * tables.n_actions + tr.a
    x = tables.X[sa]
    if tr.terminal:
        xb = np.zeros_like(x)
        xt = xb
    else:
        xb = tables.xbar[tr.s_next]
        xt = tables.xtilde[tr.s_next]
    e = gamma * tables.decay[sa] * state.e + x
    delta = tr.reward + gamma * state.w @ xb - state.w @ x
    dw = delta * e
    if tables.correction:
        dw = dw - gamma * (e @ state.h) * (xb - xt)
    w = state.w + state.alpha * dw
    h = state.h + state.beta * (delta * e - (state.h @ x) * x)
    if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > 1e12:
        raise DivergenceError(state.t)
    if tr.terminal:
        e = np.zeros_like(e)
    return replace(state, w=w, h=h, e=e, t=state.t + 1)


def _require(scheme, variant):
    if not isinstance(scheme, BootstrapScheme) or scheme.variant != variant:
        raise ValidationError(f"expected a {variant!r} bootstrap scheme, got {scheme!r}")


def abq_step(state, tr, scheme, pi, mu, features, gamma, xtilde_form="lambda"):
    """ABQ(zeta) update with gradient correction."""
    _require(scheme, "abq")
    _check_behavior(tr, mu)
    return linear_step(state, tr, learner_tables(scheme, pi, mu, features, xtilde_form), gamma)


def abtrace_step(state, tr, scheme, pi, mu, features, gamma, xtilde_form="lambda"):
    """AB-Trace(zeta): trace decay ``zeta * min(1, rho)`` with gradient correction."""
    _require(scheme, "abtrace")
    _check_behavior(tr, mu)
    return linear_step(state, tr, learner_tables(scheme, pi, mu, features, xtilde_form), gamma)


def tree_backup_step(state, tr, scheme, pi, mu, features, gamma):
    """Tabular Tree Backup: ``e = gamma zeta pi_t e + x_t``, no correction term."""
    _require(scheme, "treebackup")
    X = getattr(features, "x", features)
    if not (X.shape[0] == X.shape[1] and np.array_equal(X, np.eye(X.shape[0]))):
        raise ValidationError("Tree Backup requires tabular (identity) features")
    _check_behavior(tr, mu)
    tables = learner_tables(scheme, pi, mu, features, correction=False)
    return linear_step(state, tr, tables, gamma)


def gq_step(state, tr, lam, pi, mu, features, gamma):
    """GQ(lambda): importance-sampled trace ``gamma lambda rho_t`` with correction.

    The correction uses ``xtilde = lambda * xbar``, so the correction term is
    ``gamma (1 - lambda) (e.h) xbar``.
    """
    _check_behavior(tr, mu)
    tables = learner_tables(BootstrapScheme.constant(lam), pi, mu, features, "lambda")
    return linear_step(state, tr, tables, gamma)

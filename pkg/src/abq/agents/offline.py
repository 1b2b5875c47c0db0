"""Off-line (frozen-weight) forward and backward views of multi-step updates."""

import numpy as np

from ..bootstrap import BootstrapScheme
from ..solvers import expected_features, truncated_return


def _as_scheme(scheme):
    return scheme if isinstance(scheme, BootstrapScheme) else BootstrapScheme.constant(float(scheme))


def offline_q_lambda_forward(traj, features, pi, mu, scheme, w, alpha, gamma):
    """Per-visit deltas ``alpha (G_t - w.x_t) x_t`` with returns run to the trajectory end.

    ``scheme`` may be a float, meaning constant-lambda importance sampling.
    """
    scheme = _as_scheme(scheme)
    X = np.asarray(getattr(features, "x", features), dtype=float)
    n_a = pi.probs.shape[1]
    w = np.asarray(w, dtype=float)
    T = len(traj)
    out = np.empty((T, X.shape[1]))
    for t in range(T):
        x = X[traj.states[t] * n_a + traj.actions[t]]
        G = truncated_return(traj, X, pi, mu, scheme, w, t, T - 1 - t, gamma)
        out[t] = alpha * (G - w @ x) * x
    return out


def offline_q_lambda_backward(traj, features, pi, mu, scheme, w, alpha, gamma):
    """Per-step deltas ``alpha delta_t e_t`` with ``e_t = gamma nu_t pi_t e_{t-1} + x_t``."""
    scheme = _as_scheme(scheme)
    X = np.asarray(getattr(features, "x", features), dtype=float)
    n_a = pi.probs.shape[1]
    decay = scheme.decay_table(mu, pi)
    xbar = expected_features(X, pi)
    w = np.asarray(w, dtype=float)
    e = np.zeros(X.shape[1])
    out = np.empty((len(traj), X.shape[1]))
    for t in range(len(traj)):
        s, a = traj.states[t], traj.actions[t]
        x = X[s * n_a + a]
        e = gamma * decay[s, a] * e + x
        nxt = 0.0 if traj.terminals[t] else w @ xbar[traj.next_states[t]]
        delta = traj.rewards[t] + gamma * nxt - w @ x
        out[t] = alpha * delta * e
        if traj.terminals[t]:
            e = np.zeros_like(e)
    return out

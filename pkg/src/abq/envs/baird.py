"""Baird's seven-state star counterexample, adapted to action values.

States ``0..5`` are the outer states and state ``6`` is the hub. Action
``DASHED`` jumps to a uniformly random outer state; ``SOLID`` jumps to the
hub. Rewards are zero everywhere, so ``q_pi = 0``.

State features (8 entries) follow the classical layout: outer state ``i``
has ``2`` at position ``i`` and ``1`` at position ``7``; the hub has ``1``
at position ``6`` and ``2`` at position ``7``. The action-value feature
``x(s, a)`` copies the state features into the block of action ``a``, so
there are 16 features. They are linearly dependent (8 features over 7
states per block), which is what makes the uncorrected update unstable.
"""

import numpy as np

from ..mdp import FeatureMap, Mdp, Policy

DASHED, SOLID = 0, 1
N_STATES = 7
HUB = 6
GAMMA = 0.99
STATE_FEATURES = 8
N_FEATURES = 2 * STATE_FEATURES
W0_BLOCK = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0)


def state_features():
    """The 7 x 8 classical feature matrix."""
    phi = np.zeros((N_STATES, STATE_FEATURES))
    for i in range(HUB):
        phi[i, i] = 2.0
        phi[i, 7] = 1.0
    phi[HUB, 6] = 1.0
    phi[HUB, 7] = 2.0
    return phi


def baird():
    """Return ``(mdp, pi, mu, features, w0)`` for the counterexample."""
    p = np.zeros((N_STATES, 2, N_STATES))
    p[:, DASHED, :HUB] = 1.0 / HUB
    p[:, SOLID, HUB] = 1.0
    mdp = Mdp(p, np.zeros((N_STATES, 2)), GAMMA)
    pi = Policy(np.tile([0.0, 1.0], (N_STATES, 1)))
    mu = Policy(np.tile([6.0 / 7.0, 1.0 / 7.0], (N_STATES, 1)))
    phi = state_features()
    x = np.zeros((N_STATES * 2, N_FEATURES))
    for s in range(N_STATES):
        for a in range(2):
            x[s * 2 + a, a * STATE_FEATURES:(a + 1) * STATE_FEATURES] = phi[s]
    w0 = np.tile(W0_BLOCK, 2)
    return mdp, pi, mu, FeatureMap(x, n_actions=2), w0


def expected_iteration_radius(A, alpha):
    """Spectral radius of ``I - alpha A``, the expected uncorrected iteration."""
    return float(np.max(np.abs(np.linalg.eigvals(np.eye(A.shape[0]) - alpha * A))))

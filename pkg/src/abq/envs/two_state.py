"""Two-state, two-action off-policy task.

States 1 and 2 map to indices 0 and 1; actions ``left`` and ``right`` to 0
and 1. Each action moves deterministically: ``left`` to state 1, ``right``
to state 2. Only ``(2, right)`` is rewarded.
"""

import numpy as np

from ..mdp import FeatureMap, Mdp, Policy

LEFT, RIGHT = 0, 1
GAMMA = 0.9


def two_state():
    """Return ``(mdp, pi, mu, features)`` for the two-state task."""
    transition = np.zeros((2, 2, 2))
    transition[:, LEFT, 0] = 1.0
    transition[:, RIGHT, 1] = 1.0
    reward = np.array([[0.0, 0.0], [0.0, 1.0]])
    mdp = Mdp(transition, reward, GAMMA)
    pi = Policy([[0.1, 0.9], [0.1, 0.9]])
    mu = Policy([[0.1, 0.9], [0.9, 0.1]])
    features = FeatureMap(np.array([[1.0], [1.0], [2.0], [2.0]]), n_actions=2)
    return mdp, pi, mu, features

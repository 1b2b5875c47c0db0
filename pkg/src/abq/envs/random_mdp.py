"""Seeded random finite MDPs with binary features."""

from dataclasses import dataclass

import numpy as np

from ..mdp import FeatureMap, Mdp, Policy, stationary_distribution

MAX_RESAMPLES = 100


@dataclass(frozen=True)
class RandomMdpSpec:
    n_states: int = 100
    n_actions: int = 5
    n_features: int = 40
    seed: int = 0
    discount: float = 0.9


def _draw(spec, rng):
    n_s, n_a, n = spec.n_states, spec.n_actions, spec.n_features
    transition = rng.dirichlet(np.ones(n_s), size=(n_s, n_a))
    reward = rng.random((n_s, n_a))
    mu = rng.dirichlet(np.ones(n_a), size=n_s)
    pi = rng.dirichlet(np.ones(n_a), size=n_s)
    x = (rng.random((n_s * n_a, n)) < 0.5).astype(float)
    return transition, reward, mu, pi, x


def random_mdp(spec=RandomMdpSpec()):
    """Draw ``(mdp, pi, mu, features)`` from ``spec``.

    Transition rows and both policies are uniform on the simplex; rewards
    are uniform on ``[0, 1)``; features are fair coin flips. Instances whose
    features are linearly dependent under ``d_mu`` are redrawn with the
    next sub-seed (see :func:`random_mdp_with_info` for the redraw count).
    """
    return random_mdp_with_info(spec)[0]


def random_mdp_with_info(spec=RandomMdpSpec()):
    """Like :func:`random_mdp` but also returns the number of redraws."""
    for sub in range(MAX_RESAMPLES):
        rng = np.random.default_rng([spec.seed, sub])
        transition, reward, mu_p, pi_p, x = _draw(spec, rng)
        mdp = Mdp(transition, reward, spec.discount)
        mu = Policy(mu_p)
        d = stationary_distribution(mdp, mu).d
        C = (x.T * d) @ x
        if np.linalg.matrix_rank(C) == spec.n_features:
            return (mdp, Policy(pi_p), mu, FeatureMap(x, spec.n_actions)), sub
    raise RuntimeError(f"no full-rank feature draw for seed {spec.seed} after {MAX_RESAMPLES} tries")

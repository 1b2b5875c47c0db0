"""Finite MDPs over state-action pairs and the exact quantities derived from them.

Every vector or matrix indexed by state-action pairs uses the canonical
enumeration ``sa = s * n_actions + a``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import ValidationError, check_array, check_scalar, check_stochastic

# Direct solves are used up to this many pairs; larger chains use power iteration.
DIRECT_SOLVE_LIMIT = 5000
POWER_ITER_CAP = 1_000_000
POWER_ITER_TOL = 1e-12


class ReducibleChainError(ValueError):
    """The behavior chain has no unique stationary distribution."""


def _frozen(a):
    a.setflags(write=False)
    return a


def sa_index(s, a, n_actions):
    return s * n_actions + a


@dataclass(frozen=True)
class Mdp:
    """Finite MDP with transition tensor ``p(s'|s,a)`` indexed ``[s, a, s']``."""

    transition: np.ndarray
    reward_mean: np.ndarray
    discount: float

    def __post_init__(self):
        p = check_array(self.transition, ndim=3, name="transition")
        if p.shape[0] != p.shape[2]:
            raise ValidationError(f"transition must have shape (S, A, S), got {p.shape}")
        p = check_stochastic(p, axis=2, name="transition")
        r = check_array(self.reward_mean, ndim=2, name="reward_mean")
        if r.shape != p.shape[:2]:
            raise ValidationError(f"reward_mean shape {r.shape} does not match {p.shape[:2]}")
        gamma = check_scalar(self.discount, "discount", lo=0.0, hi=1.0, hi_open=True)
        object.__setattr__(self, "transition", _frozen(p))
        object.__setattr__(self, "reward_mean", _frozen(r))
        object.__setattr__(self, "discount", gamma)

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def n_actions(self):
        return self.transition.shape[1]

    @property
    def n_pairs(self):
        return self.n_states * self.n_actions

    @property
    def rewards(self):
        """Expected reward vector over pairs in canonical order."""
        return self.reward_mean.reshape(-1)


@dataclass(frozen=True)
class Policy:
    """Stationary randomized policy; ``probs[s, a] = pi(a|s)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = check_stochastic(check_array(self.probs, ndim=2, name="policy"), axis=1, name="policy")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    def __call__(self, a, s):
        return self.probs[s, a]


@dataclass(frozen=True)
class FeatureMap:
    """Feature matrix ``X`` whose row ``sa`` is ``x(s, a)``."""

    x: np.ndarray
    n_actions: int = field(default=None)

    def __post_init__(self):
        x = check_array(self.x, ndim=2, name="features")
        object.__setattr__(self, "x", _frozen(x))

    @property
    def n_features(self):
        return self.x.shape[1]

    @property
    def n_pairs(self):
        return self.x.shape[0]

    def __call__(self, s, a):
        if self.n_actions is None:
            raise ValueError("n_actions unknown; index rows directly")
        return self.x[s * self.n_actions + a]

    @classmethod
    def tabular(cls, n_states, n_actions):
        return cls(np.eye(n_states * n_actions), n_actions)

    def is_tabular(self):
        return self.x.shape[0] == self.x.shape[1] and np.array_equal(self.x, np.eye(self.x.shape[0]))


@dataclass(frozen=True)
class StateActionDist:
    """Probability vector over pairs, e.g. the behavior chain's stationary law."""

    d: np.ndarray

    def __post_init__(self):
        d = check_array(self.d, ndim=1, name="distribution")
        if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-10:
            raise ValidationError("distribution must be non-negative and sum to 1")
        object.__setattr__(self, "d", _frozen(d))

    @property
    def diag(self):
        return np.diag(self.d)


def _check_compatible(mdp, policy):
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValidationError(
            f"policy shape {policy.probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
        )


def target_transition_matrix(mdp, pi):
    """Pair-to-pair transition matrix ``[P]_{sa,s'a'} = p(s'|s,a) pi(a'|s')``.

    Works for any policy; pass the behavior policy to get ``P_mu``.
    """
    _check_compatible(mdp, pi)
    n_sa = mdp.n_pairs
    p = mdp.transition.reshape(n_sa, mdp.n_states)
    return (p[:, :, None] * pi.probs[None, :, :]).reshape(n_sa, n_sa)


def _closed_class_count(P):
    support = csr_matrix(P > 0)
    n_comp, labels = connected_components(support, directed=True, connection="strong")
    # A strongly connected component is closed if no edge leaves it.
    rows, cols = support.nonzero()
    leaks = np.zeros(n_comp, dtype=bool)
    leaks[labels[rows][labels[rows] != labels[cols]]] = True
    return int(np.count_nonzero(~leaks))


def _power_iteration(P):
    n = P.shape[0]
    d = np.full(n, 1.0 / n)
    # Lazy chain has the same stationary law and cannot oscillate.
    lazy = 0.5 * (P + np.eye(n))
    for _ in range(POWER_ITER_CAP):
        nxt = d @ lazy
        if np.max(np.abs(nxt - d)) < POWER_ITER_TOL:
            return nxt / nxt.sum()
        d = nxt
    raise ReducibleChainError("power iteration did not converge within the iteration cap")


def stationary_distribution(mdp, mu, direct_limit=DIRECT_SOLVE_LIMIT):
    """Invariant distribution ``d_mu`` of the behavior chain over pairs.

    Raises ReducibleChainError when the chain has more than one closed
    class, since the invariant distribution is then not unique.
    """
    P = target_transition_matrix(mdp, mu)
    n = P.shape[0]
    if _closed_class_count(P) != 1:
        raise ReducibleChainError("behavior chain has several closed classes; d_mu is not unique")
    if n <= direct_limit:
        lhs = np.vstack([P.T - np.eye(n), np.ones((1, n))])
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        d, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    else:
        d = _power_iteration(P)
    d = np.where(np.abs(d) < 1e-15, 0.0, d)
    if np.any(d < -1e-12):
        raise ReducibleChainError("null-space solve produced negative mass")
    d = np.clip(d, 0.0, None)
    d /= d.sum()
    resid = np.max(np.abs(d @ P - d))
    if resid > 1e-10:
        raise ReducibleChainError(f"stationary residual {resid:.3g} exceeds tolerance")
    return StateActionDist(d)


def exact_q_pi(mdp, pi):
    """Solve ``q = r + gamma P_pi q`` for the target action-value vector."""
    P = target_transition_matrix(mdp, pi)
    lhs = np.eye(mdp.n_pairs) - mdp.discount * P
    q = np.linalg.solve(lhs, mdp.rewards)
    assert np.max(np.abs(q - mdp.rewards - mdp.discount * P @ q)) <= 1e-10 * (1 + np.max(np.abs(q)))
    return q


def monte_carlo_q(mdp, pi, n_rollouts=2000, seed=0, tol=1e-10):
    """Monte Carlo estimate of ``q_pi`` with per-pair standard errors.

    Rollouts follow ``pi`` after the first action and are truncated once
    ``gamma**t`` drops below ``tol``. Returns ``(mean, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    gamma = mdp.discount
    horizon = 1 if gamma == 0 else int(np.ceil(np.log(tol) / np.log(gamma))) + 1
    cum_p = np.cumsum(mdp.transition, axis=2)
    cum_pi = np.cumsum(pi.probs, axis=1)
    n_s, n_a = mdp.n_states, mdp.n_actions
    mean = np.zeros(mdp.n_pairs)
    se = np.zeros(mdp.n_pairs)
    for s0 in range(n_s):
        for a0 in range(n_a):
            s = np.full(n_rollouts, s0)
            a = np.full(n_rollouts, a0)
            ret = np.zeros(n_rollouts)
            disc = 1.0
            for _ in range(horizon):
                ret += disc * mdp.reward_mean[s, a]
                disc *= gamma
                u = rng.random(n_rollouts)
                s = np.minimum((u[:, None] > cum_p[s, a]).sum(axis=1), n_s - 1)
                u = rng.random(n_rollouts)
                a = np.minimum((u[:, None] > cum_pi[s]).sum(axis=1), n_a - 1)
            k = sa_index(s0, a0, n_a)
            mean[k] = ret.mean()
            se[k] = ret.std(ddof=1) / np.sqrt(n_rollouts)
    return mean, se


def load_json(path):
    """Load an MDP bundle written in the JSON interchange layout.

    Returns a dict with keys ``mdp``, ``target``, ``behavior`` and
    ``features``; the last three are None when absent from the document.
    """
    doc = json.loads(Path(path).read_text())
    return from_dict(doc)


def from_dict(doc):
    mdp = Mdp(np.asarray(doc["transition"], dtype=float),
              np.asarray(doc["reward_mean"], dtype=float),
              doc["discount"])
    if doc.get("n_states") is not None and doc["n_states"] != mdp.n_states:
        raise ValidationError("n_states disagrees with transition tensor")
    if doc.get("n_actions") is not None and doc["n_actions"] != mdp.n_actions:
        raise ValidationError("n_actions disagrees with transition tensor")
    policies = doc.get("policies", {})
    target = Policy(policies["target"]) if "target" in policies else None
    behavior = Policy(policies["behavior"]) if "behavior" in policies else None
    for pol in (target, behavior):
        if pol is not None:
            _check_compatible(mdp, pol)
    features = None
    if doc.get("features") is not None:
        features = FeatureMap(np.asarray(doc["features"], dtype=float), mdp.n_actions)
        if features.n_pairs != mdp.n_pairs:
            raise ValidationError("feature matrix must have one row per state-action pair")
    return {"mdp": mdp, "target": target, "behavior": behavior, "features": features}


def to_dict(mdp, target=None, behavior=None, features=None):
    doc = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "transition": mdp.transition.tolist(),
        "reward_mean": mdp.reward_mean.tolist(),
        "discount": mdp.discount,
        "policies": {},
    }
    if target is not None:
        doc["policies"]["target"] = target.probs.tolist()
    if behavior is not None:
        doc["policies"]["behavior"] = behavior.probs.tolist()
    if features is not None:
        doc["features"] = features.x.tolist()
    return doc

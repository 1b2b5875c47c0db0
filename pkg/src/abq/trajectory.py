"""Sampled experience streams from finite MDPs."""

from dataclasses import dataclass

import numba
import numpy as np

from ._validation import check_random_state
from .mdp import stationary_distribution


@dataclass(frozen=True)
class Trajectory:
    """A stream of transitions ``(S_t, A_t, R_{t+1}, S_{t+1})``.

    ``terminals[t]`` marks that ``S_{t+1}`` is terminal; the following
    transition, if any, starts a new episode.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __post_init__(self):
        n = len(self.states)
        for name in ("actions", "rewards", "next_states", "terminals"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trajectory field {name} has inconsistent length")

    def __len__(self):
        return len(self.states)

    def __getitem__(self, sl):
        if not isinstance(sl, slice):
            raise TypeError("trajectories support slicing only")
        return Trajectory(self.states[sl], self.actions[sl], self.rewards[sl],
                          self.next_states[sl], self.terminals[sl])


@numba.njit(cache=True)
def _sample_chain(cum_p, cum_mu, rewards, s0, a0, u_next, u_act, noise, out_s, out_a, out_r, out_sn):
    n_s = cum_p.shape[2]
    n_a = cum_mu.shape[1]
    s, a = s0, a0
    for t in range(out_s.shape[0]):
        out_s[t] = s
        out_a[t] = a
        out_r[t] = rewards[s, a] + noise[t]
        sn = 0
        while sn < n_s - 1 and u_next[t] > cum_p[s, a, sn]:
            sn += 1
        out_sn[t] = sn
        an = 0
        while an < n_a - 1 and u_act[t] > cum_mu[sn, an]:
            an += 1
        s, a = sn, an


def sample_trajectory(mdp, mu, n_steps, seed=None, start="stationary", reward_noise=0.0):
    """Follow ``mu`` for ``n_steps`` transitions.

    ``start`` is ``"stationary"`` (draw the first pair from ``d_mu``), a
    state index (first action drawn from ``mu``), or a ``(s, a)`` tuple.
    """
    rng = check_random_state(seed)
    n_a = mdp.n_actions
    if isinstance(start, str) and start == "stationary":
        d = stationary_distribution(mdp, mu).d
        k = int(rng.choice(len(d), p=d))
        s0, a0 = divmod(k, n_a)
    elif isinstance(start, tuple):
        s0, a0 = start
    else:
        s0 = int(start)
        a0 = int(rng.choice(n_a, p=mu.probs[s0]))
    u_next = rng.random(n_steps)
    u_act = rng.random(n_steps)
    noise = reward_noise * rng.standard_normal(n_steps) if reward_noise else np.zeros(n_steps)
    out_s = np.empty(n_steps, np.int64)
    out_a = np.empty(n_steps, np.int64)
    out_r = np.empty(n_steps)
    out_sn = np.empty(n_steps, np.int64)
    _sample_chain(np.cumsum(mdp.transition, axis=2), np.cumsum(mu.probs, axis=1), mdp.reward_mean,
                  s0, a0, u_next, u_act, noise, out_s, out_a, out_r, out_sn)
    return Trajectory(out_s, out_a, out_r, out_sn, np.zeros(n_steps, dtype=bool))

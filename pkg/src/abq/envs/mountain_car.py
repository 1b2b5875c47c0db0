"""Off-policy evaluation on Mountain Car with tile-coded action-value features.

Actions are ``0 = reverse``, ``1 = none``, ``2 = forward``. Both policies
push in the direction of motion when the car moves toward the goal
(``vel > 0``) and push backward otherwise; they differ in how much they
explore the other actions, so importance ratios reach 30.

Features: ten 4x4 tilings over (position, velocity), each offset by
``i/10`` of a tile width in both dimensions. The 160 (tiling, tile) cells
are hashed into 32 slots per action; a hash collision within one state is
resolved by linear probing, so every feature vector has exactly ten ones,
all inside the block of its action.
"""

from dataclasses import dataclass

import numba
import numpy as np

from ..mdp import Policy

POS_MIN, POS_MAX = -1.2, 0.5
VEL_MAX = 0.07
GAMMA = 0.999
N_ACTIONS = 3
N_TILINGS = 10
TILES_PER_DIM = 4
SLOTS_PER_ACTION = 32
N_FEATURES = N_ACTIONS * SLOTS_PER_ACTION
STEP_CAP = 100_000

TOWARD, AWAY = 0, 1
# Rows indexed by policy mode: TOWARD when vel > 0, AWAY otherwise.
BEHAVIOR_PROBS = np.array([[1 / 300, 1 / 300, 298 / 300], [298 / 300, 1 / 300, 1 / 300]])
TARGET_PROBS = np.array([[0.1, 0.1, 0.8], [0.8, 0.1, 0.1]])


class OutOfRangeError(ValueError):
    pass


@numba.njit(cache=True)
def _step(pos, vel, action):
    vel = vel + 0.001 * (action - 1) - 0.0025 * np.cos(3.0 * pos)
    vel = min(max(vel, -VEL_MAX), VEL_MAX)
    pos = pos + vel
    if pos <= POS_MIN:
        pos = POS_MIN
        vel = 0.0
    if pos >= POS_MAX:
        return POS_MAX, vel, True
    return pos, vel, False


def _check_state(pos, vel):
    if not (POS_MIN <= pos <= POS_MAX) or abs(vel) > VEL_MAX:
        raise OutOfRangeError(f"state ({pos}, {vel}) outside the Mountain Car box")


def mountain_car_step(pos, vel, action, rng=None):
    """Advance one step; returns ``(pos, vel, reward, terminal)``.

    Dynamics are deterministic, ``rng`` is accepted for interface symmetry.
    """
    _check_state(pos, vel)
    if action not in (0, 1, 2):
        raise OutOfRangeError(f"invalid action {action}")
    p, v, term = _step(float(pos), float(vel), int(action))
    return p, v, -1.0, bool(term)


@numba.njit(cache=True)
def policy_mode(vel):
    return TOWARD if vel > 0.0 else AWAY


def mountain_car_policies(pos, vel):
    """``(mu_probs, pi_probs)`` over the three actions at this state."""
    _check_state(pos, vel)
    m = policy_mode(vel)
    return BEHAVIOR_PROBS[m].copy(), TARGET_PROBS[m].copy()


def mode_policies():
    """Behavior and target as 2-row policies indexed by :func:`policy_mode`."""
    return Policy(BEHAVIOR_PROBS), Policy(TARGET_PROBS)


@numba.njit(cache=True)
def tile_slots(pos, vel, out):
    """Write the ten active slots (within one action block) for a state into ``out``."""
    p = (pos - POS_MIN) / (POS_MAX - POS_MIN) * TILES_PER_DIM
    v = (vel + VEL_MAX) / (2 * VEL_MAX) * TILES_PER_DIM
    used = np.zeros(SLOTS_PER_ACTION, np.bool_)
    for i in range(N_TILINGS):
        off = i / N_TILINGS
        ip = min(int(np.floor(p + off)), TILES_PER_DIM - 1)
        iv = min(int(np.floor(v + off)), TILES_PER_DIM - 1)
        tile = ip * TILES_PER_DIM + iv
        slot = (13 * i + 5 * tile) % SLOTS_PER_ACTION
        while used[slot]:
            slot = (slot + 1) % SLOTS_PER_ACTION
        used[slot] = True
        out[i] = slot


def tile_code(pos, vel, action):
    """Binary 96-vector with ten ones inside block ``action``."""
    _check_state(pos, vel)
    slots = np.empty(N_TILINGS, np.int64)
    tile_slots(float(pos), float(vel), slots)
    x = np.zeros(N_FEATURES)
    x[action * SLOTS_PER_ACTION + slots] = 1.0
    return x


@numba.njit(cache=True)
def _start_state():
    pos = np.random.uniform(-0.6, -0.4)
    mag = np.random.uniform(0.005, 0.02)
    vel = mag if np.random.random() < 0.5 else -mag
    return pos, vel


@numba.njit(cache=True)
def _sample_action(probs, mode):
    u = np.random.random()
    acc = 0.0
    for a in range(N_ACTIONS - 1):
        acc += probs[mode, a]
        if u < acc:
            return a
    return N_ACTIONS - 1


@numba.njit(cache=True)
def _behavior_stream(seed, n_episodes, n_steps, probs, step_cap):
    """Simulate under ``probs``; stop after ``n_episodes`` or ``n_steps`` transitions."""
    np.random.seed(seed)
    cap = n_steps if n_steps > 0 else n_episodes * 2000
    pos_a = np.empty(cap)
    vel_a = np.empty(cap)
    act_a = np.empty(cap, np.int64)
    npos_a = np.empty(cap)
    nvel_a = np.empty(cap)
    term_a = np.zeros(cap, np.bool_)
    t = 0
    episodes = 0
    truncations = 0
    while True:
        pos, vel = _start_state()
        k = 0
        while True:
            if t == cap:
                if n_steps > 0:
                    return pos_a, vel_a, act_a, npos_a, nvel_a, term_a, episodes, truncations
                cap *= 2
                pos_a = np.concatenate((pos_a, np.empty(cap - t)))
                vel_a = np.concatenate((vel_a, np.empty(cap - t)))
                act_a = np.concatenate((act_a, np.empty(cap - t, np.int64)))
                npos_a = np.concatenate((npos_a, np.empty(cap - t)))
                nvel_a = np.concatenate((nvel_a, np.empty(cap - t)))
                term_a = np.concatenate((term_a, np.zeros(cap - t, np.bool_)))
            a = _sample_action(probs, policy_mode(vel))
            npos, nvel, term = _step(pos, vel, a)
            pos_a[t] = pos
            vel_a[t] = vel
            act_a[t] = a
            npos_a[t] = npos
            nvel_a[t] = nvel
            k += 1
            cut = k >= step_cap
            term_a[t] = term or cut
            if cut and not term:
                truncations += 1
            t += 1
            if term or cut:
                break
            pos, vel = npos, nvel
        episodes += 1
        if n_steps <= 0 and episodes == n_episodes:
            n = t
            return (pos_a[:n], vel_a[:n], act_a[:n], npos_a[:n], nvel_a[:n], term_a[:n],
                    episodes, truncations)


@dataclass(frozen=True)
class MountainCarStream:
    """Transitions generated by the behavior policy.

    ``terminals[t]`` is true when the episode ends after step ``t`` (goal
    reached or step cap hit); ``episode_ends`` lists those step indices.
    """

    pos: np.ndarray
    vel: np.ndarray
    actions: np.ndarray
    next_pos: np.ndarray
    next_vel: np.ndarray
    terminals: np.ndarray
    truncations: int = 0

    def __len__(self):
        return len(self.pos)

    @property
    def rewards(self):
        return np.full(len(self.pos), -1.0)

    @property
    def episode_ends(self):
        return np.flatnonzero(self.terminals)


def behavior_stream(seed, n_episodes=None, n_steps=None, step_cap=STEP_CAP, policy=BEHAVIOR_PROBS):
    """Sample ``n_episodes`` full episodes (or exactly ``n_steps`` steps) under ``policy``."""
    if (n_episodes is None) == (n_steps is None):
        raise ValueError("give exactly one of n_episodes or n_steps")
    out = _behavior_stream(int(seed), n_episodes or 0, n_steps or 0, np.asarray(policy, float), step_cap)
    return MountainCarStream(*out[:6], truncations=int(out[7]))


@dataclass(frozen=True)
class MountainCarTask:
    gamma: float = GAMMA
    step_cap: int = STEP_CAP
    n_pairs: int = 30
    n_rollouts: int = 100
    selection_steps: int = 1_000_000


@numba.njit(cache=True)
def _rollout_returns(seed, pos0, vel0, act0, n_rollouts, probs, gamma, tol, step_cap):
    np.random.seed(seed)
    n = pos0.shape[0]
    out = np.empty((n, n_rollouts))
    truncated = 0
    for i in range(n):
        for r in range(n_rollouts):
            pos, vel, a = pos0[i], vel0[i], act0[i]
            ret = 0.0
            disc = 1.0
            k = 0
            while True:
                pos, vel, term = _step(pos, vel, a)
                ret -= disc
                disc *= gamma
                k += 1
                if term:
                    break
                if disc < tol or k >= step_cap:
                    truncated += 1
                    break
                a = _sample_action(probs, policy_mode(vel))
            out[i, r] = ret
    return out, truncated


@dataclass(frozen=True)
class GroundTruth:
    pos: np.ndarray
    vel: np.ndarray
    actions: np.ndarray
    q_hat: np.ndarray
    returns: np.ndarray
    truncated_rollouts: int

    def features(self):
        return np.array([tile_code(p, v, a) for p, v, a in zip(self.pos, self.vel, self.actions)])


def ground_truth_pairs(task=MountainCarTask(), seed=0):
    """Pick evaluation pairs from a long behavior run and estimate their target values.

    Pairs are drawn uniformly from the second half of the run; each value is
    the mean discounted return of ``task.n_rollouts`` target-policy rollouts,
    cut off once ``gamma**t < 1e-6``.
    """
    rng = np.random.default_rng([seed, 1])
    stream = behavior_stream(int(rng.integers(2**31)), n_steps=task.selection_steps, step_cap=task.step_cap)
    half = task.selection_steps // 2
    idx = np.sort(rng.choice(np.arange(half, task.selection_steps), size=task.n_pairs, replace=False))
    pos, vel, act = stream.pos[idx], stream.vel[idx], stream.actions[idx]
    returns, truncated = _rollout_returns(int(rng.integers(2**31)), pos, vel, act, task.n_rollouts,
                                          TARGET_PROBS, task.gamma, 1e-6, task.step_cap)
    return GroundTruth(pos, vel, act, returns.mean(axis=1), returns, int(truncated))


@numba.njit(cache=True)
def _slots_for(pos, vel):
    out = np.empty((pos.shape[0], N_TILINGS), np.int64)
    for t in range(pos.shape[0]):
        tile_slots(pos[t], vel[t], out[t])
    return out


def stream_arrays(stream):
    """Tile slots and policy modes for the current and next state of each step."""
    modes = (stream.vel <= 0).astype(np.int64)
    next_modes = (stream.next_vel <= 0).astype(np.int64)
    return (_slots_for(stream.pos, stream.vel), _slots_for(stream.next_pos, stream.next_vel),
            modes, next_modes)

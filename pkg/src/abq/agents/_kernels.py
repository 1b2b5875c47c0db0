"""Compiled inner loops for the linear learners.

All learners share one update:

    e     <- gamma * c_t * e + x_t                 (c_t = nu_t pi_t)
    delta  = R + gamma w.xbar' - w.x
    w     <- w + alpha (delta e - gamma (e.h) (xbar' - xtilde'))
    h     <- h + beta (delta e - (h.x) x)

Terminal transitions zero ``xbar'`` and ``xtilde'`` and clear the trace
afterwards.
"""

import numba
import numpy as np

DIVERGENCE_LIMIT = 1e12


@numba.njit(cache=True)
def _diverged(w):
    for i in range(w.shape[0]):
        v = w[i]
        if not np.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
            return True
    return False


@numba.njit(cache=True)
def _quad(w, Q, qv, c0):
    n = w.shape[0]
    acc = c0
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += Q[i, j] * w[j]
        acc += w[i] * row - 2.0 * qv[i] * w[i]
    return acc


@numba.njit(cache=True)
def run_dense(X, xbar, xtilde, decay, n_actions, states, actions, rewards, next_states, terminals,
              gamma, alpha0, alpha_pow, beta0, beta_pow, t0, correction, w, h, e,
              Q, qv, c0, record_every, out_metric):
    """Run the shared update over a finite-MDP stream in place.

    Returns the index of the step at which the weights diverged, or -1.
    ``out_metric[k]`` receives the quadratic metric ``w'Qw - 2qv'w + c0``
    after step ``(k + 1) * record_every - 1`` when ``record_every > 0``.
    """
    n = w.shape[0]
    dw = np.empty(n)
    for t in range(states.shape[0]):
        step = t0 + t + 1.0
        alpha = alpha0 / step ** alpha_pow if alpha_pow != 0.0 else alpha0
        beta = beta0 / step ** beta_pow if beta_pow != 0.0 else beta0
        sa = states[t] * n_actions + actions[t]
        c = gamma * decay[sa]
        sn = next_states[t]
        term = terminals[t]
        vx = 0.0
        vb = 0.0
        hx = 0.0
        for i in range(n):
            e[i] = c * e[i] + X[sa, i]
            vx += w[i] * X[sa, i]
            hx += h[i] * X[sa, i]
            if not term:
                vb += w[i] * xbar[sn, i]
        delta = rewards[t] + gamma * vb - vx
        eh = 0.0
        for i in range(n):
            eh += e[i] * h[i]
        for i in range(n):
            dw[i] = delta * e[i]
            if correction and not term:
                dw[i] -= gamma * eh * (xbar[sn, i] - xtilde[sn, i])
        for i in range(n):
            h[i] += beta * (delta * e[i] - hx * X[sa, i])
            w[i] += alpha * dw[i]
        if term:
            for i in range(n):
                e[i] = 0.0
        if _diverged(w):
            return t
        if record_every > 0 and (t + 1) % record_every == 0:
            out_metric[(t + 1) // record_every - 1] = _quad(w, Q, qv, c0)
    return -1


@numba.njit(cache=True)
def backward_update_batches(X, xbar, decay, n_actions, states, actions, rewards, next_states,
                            terminals, gamma, w, burn_in, n_batches):
    """Batch means of ``delta_t e_t`` with ``w`` held fixed.

    The first ``burn_in`` steps only warm up the trace. Remaining steps are
    split into ``n_batches`` contiguous batches of equal length.
    """
    n = w.shape[0]
    T = states.shape[0] - burn_in
    size = T // n_batches
    out = np.zeros((n_batches, n))
    e = np.zeros(n)
    for t in range(burn_in + size * n_batches):
        sa = states[t] * n_actions + actions[t]
        c = gamma * decay[sa]
        sn = next_states[t]
        vx = 0.0
        vb = 0.0
        for i in range(n):
            e[i] = c * e[i] + X[sa, i]
            vx += w[i] * X[sa, i]
            if not terminals[t]:
                vb += w[i] * xbar[sn, i]
        delta = rewards[t] + gamma * vb - vx
        if t >= burn_in:
            k = (t - burn_in) // size
            for i in range(n):
                out[k, i] += delta * e[i]
        if terminals[t]:
            for i in range(n):
                e[i] = 0.0
    return out / size


@numba.njit(cache=True)
def run_tiled(cur_slots, next_slots, modes, next_modes, actions, rewards, terminals, block,
              pi_probs, decay, xt_weight, gamma, alpha, beta, correction, w, h, e,
              Q, qv, c0, out_metric):
    """Shared update for binary features laid out in per-action blocks.

    Feature ``x(s, a)`` has ones at ``a * block + slots(s)``. Policies and
    bootstrapping tables are indexed by a discrete policy mode of the state.
    ``out_metric[k]`` receives the quadratic metric at the end of episode
    ``k``. Returns the divergence step or -1.
    """
    n = w.shape[0]
    k_active = cur_slots.shape[1]
    n_actions = pi_probs.shape[1]
    diff = np.zeros(n)
    episode = 0
    for t in range(actions.shape[0]):
        a = actions[t]
        m = modes[t]
        term = terminals[t]
        c = gamma * decay[m, a]
        for i in range(n):
            e[i] *= c
        vx = 0.0
        hx = 0.0
        for j in range(k_active):
            idx = a * block + cur_slots[t, j]
            e[idx] += 1.0
            vx += w[idx]
            hx += h[idx]
        vb = 0.0
        if not term:
            mn = next_modes[t]
            for b in range(n_actions):
                pb = pi_probs[mn, b]
                for j in range(k_active):
                    idx = b * block + next_slots[t, j]
                    vb += pb * w[idx]
                    diff[idx] = pb - xt_weight[mn, b]
        delta = rewards[t] + gamma * vb - vx
        eh = 0.0
        if correction and not term:
            for i in range(n):
                eh += e[i] * h[i]
        for i in range(n):
            h[i] += beta * delta * e[i]
            w[i] += alpha * delta * e[i]
        if beta != 0.0:
            for j in range(k_active):
                h[a * block + cur_slots[t, j]] -= beta * hx
        if correction and not term:
            mn = next_modes[t]
            for b in range(n_actions):
                for j in range(k_active):
                    idx = b * block + next_slots[t, j]
                    w[idx] -= alpha * gamma * eh * diff[idx]
                    diff[idx] = 0.0
        if term:
            for i in range(n):
                e[i] = 0.0
            if episode < out_metric.shape[0]:
                out_metric[episode] = _quad(w, Q, qv, c0)
            episode += 1
        if _diverged(w):
            return t
    return -1

"""Compiled inner loops for the event-driven layer scan and the SGD update."""

import numpy as np
from numba import njit


@njit(cache=True)
def scan_layer(weights, threshold, order, sorted_t, t_max):
    """Running weight sum per neuron over time-sorted input spikes.

    ``order`` lists the live input indices sorted by spike time, ``sorted_t``
    their times. The threshold test happens only after a whole equal-time group
    has been added. The scan for a neuron stops at its first crossing.
    """
    n_post = weights.shape[0]
    n = order.shape[0]
    times = np.full(n_post, t_max, dtype=np.int64)
    fake = np.ones(n_post, dtype=np.bool_)
    pot = np.zeros(n_post)
    for j in range(n_post):
        v = 0.0
        k = 0
        while k < n:
            t = sorted_t[k]
            while k < n and sorted_t[k] == t:
                v += weights[j, order[k]]
                k += 1
            if v >= threshold:
                times[j] = t
                fake[j] = False
                break
        pot[j] = v
    return times, fake, pot


@njit(cache=True)
def sgd_layer(weights, delta, post_times, post_active, pre_times, pre_live, eta, lam):
    """In-place ``w <- w - eta * (g + 2 * lam * w)``.

    ``g = -delta_j`` where neuron j is active and input i is live with
    ``t_i <= t_j``, else 0. Same arithmetic as the dense numpy update, so the
    results agree bit for bit. Returns False if any weight became non-finite.
    """
    n_post, n_pre = weights.shape
    decay = 2.0 * lam
    ok = True
    for j in range(n_post):
        active = post_active[j] and delta[j] != 0.0
        if not active and lam == 0.0:
            continue
        row = weights[j]
        tj = post_times[j]
        g_on = -delta[j]
        for i in range(n_pre):
            g = g_on if active and pre_live[i] and pre_times[i] <= tj else 0.0
            row[i] = row[i] - eta * (g + decay * row[i])
            if not np.isfinite(row[i]):
                ok = False
    return ok

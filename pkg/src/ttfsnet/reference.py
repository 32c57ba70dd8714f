"""Brute-force reference implementations.

These transcribe the neuron dynamics and the learning rule as literally as
possible: a clock loop over every time step for the forward pass, and nested
loops over neurons for the gradients. They are slow on purpose and share no
code with the event-driven engine or the vectorized backward pass, so they can
serve as the oracle both in tests and behind ``--engine reference``.
"""

from __future__ import annotations

import math

import numpy as np

from .encoding import SimGrid, SpikeVector
from .errors import ShapeError
from .forward import ForwardTrace, Mode
from .network import LayerParams, NetworkParams


def dense_forward_layer(
    pre: SpikeVector,
    layer: LayerParams,
    grid: SimGrid,
    mode: Mode = Mode.TRAIN,
    horizon: int | None = None,
) -> tuple[SpikeVector, np.ndarray]:
    """Clock-driven simulation: step t = 0..t_max, add the weights of inputs spiking at t, test threshold."""
    if len(pre) != layer.n_pre:
        raise ShapeError(f"layer expects {layer.n_pre} inputs, got {len(pre)}")
    last = grid.t_max if horizon is None else min(horizon, grid.t_max)
    n_post = layer.n_post
    v = np.zeros(n_post)
    has_fired = np.zeros(n_post, dtype=bool)
    times = np.full(n_post, grid.t_max, dtype=np.int64)
    v_at_fire = np.zeros(n_post)
    for t in range(last + 1):
        arriving = [i for i in range(len(pre)) if not pre.fake[i] and pre.times[i] == t]
        for i in arriving:
            v += layer.weights[:, i]
        for j in range(n_post):
            if not has_fired[j] and v[j] >= layer.threshold:
                has_fired[j] = True
                times[j] = t
                v_at_fire[j] = v[j]
    pot = np.where(has_fired, v_at_fire, v)
    return SpikeVector(times, ~has_fired), pot


def dense_forward_layer_fast(pre, layer, grid, mode=Mode.TRAIN, horizon=None):
    """Same clock loop, vectorized over neurons; fast enough for full test-set runs."""
    if len(pre) != layer.n_pre:
        raise ShapeError(f"layer expects {layer.n_pre} inputs, got {len(pre)}")
    last = grid.t_max if horizon is None else min(horizon, grid.t_max)
    n_post = layer.n_post
    v = np.zeros(n_post)
    has_fired = np.zeros(n_post, dtype=bool)
    times = np.full(n_post, grid.t_max, dtype=np.int64)
    v_at_fire = np.zeros(n_post)
    real = ~pre.fake
    for t in range(last + 1):
        arriving = np.flatnonzero(real & (pre.times == t))
        if arriving.size:
            v = v + layer.weights[:, arriving].sum(axis=1)
        new = ~has_fired & (v >= layer.threshold)
        times[new] = t
        v_at_fire[new] = v[new]
        has_fired |= new
    return SpikeVector(times, ~has_fired), np.where(has_fired, v_at_fire, v)


def dense_forward_network(inputs: SpikeVector, params: NetworkParams, mode: Mode = Mode.TRAIN,
                          fast: bool = True) -> ForwardTrace:
    layer_fn = dense_forward_layer_fast if fast else dense_forward_layer
    spikes = [inputs]
    potentials = []
    for layer in params.layers:
        out, pot = layer_fn(spikes[-1], layer, params.grid, mode)
        spikes.append(out)
        potentials.append(pot)
    out = spikes[-1]
    decision = int(out.times[out.fired].min()) if out.fired.any() else params.grid.t_max
    count = 0
    for s in spikes:
        for i in range(len(s)):
            if not s.fake[i] and s.times[i] <= decision:
                count += 1
    return ForwardTrace(spikes, potentials, decision, count)


def naive_backward(
    trace: ForwardTrace,
    params: NetworkParams,
    targets,
    normalize_hidden: bool = True,
    normalize_output: bool = True,
    norm_ord: int = 2,
) -> list[np.ndarray]:
    """Gradients of the squared temporal error, one scalar at a time."""
    t_max = params.grid.t_max
    n_layers = len(params.layers)
    out = trace.spikes[-1]
    C = len(out)

    deltas: list[list[float]] = [[] for _ in range(n_layers)]
    d_out = []
    for j in range(C):
        e_j = (float(targets[j]) - float(out.times[j])) / t_max
        d_out.append(-e_j)
    if normalize_output:
        d_out = _normalize_list(d_out, norm_ord)
    deltas[n_layers - 1] = d_out

    for l in range(n_layers - 2, -1, -1):
        w_next = params.layers[l + 1].weights
        t_here = trace.spikes[l + 1].times
        t_next = trace.spikes[l + 2].times
        d_here = []
        for j in range(params.layers[l].n_post):
            total = 0.0
            for k in range(params.layers[l + 1].n_post):
                if t_here[j] <= t_next[k]:
                    total += deltas[l + 1][k] * w_next[k, j]
            d_here.append(total)
        if normalize_hidden:
            d_here = _normalize_list(d_here, norm_ord)
        deltas[l] = d_here

    grads = []
    for l in range(n_layers):
        pre = trace.spikes[l]
        post = trace.spikes[l + 1]
        g = np.zeros(params.layers[l].weights.shape)
        for j in range(len(post)):
            t_j = post.times[j]
            if post.fake[j] or not t_j < t_max:
                continue
            for i in range(len(pre)):
                # input spike counted up to the firing step (inclusive)
                if not pre.fake[i] and pre.times[i] <= t_j:
                    g[j, i] = -deltas[l][j]
        grads.append(g)
    return grads


def _normalize_list(d: list[float], norm_ord: int) -> list[float]:
    norm = 0.0
    for x in d:
        norm += abs(x) if norm_ord == 1 else x * x
    if norm_ord == 2:
        norm = math.sqrt(norm)
    if norm <= 1e-12:
        return list(d)
    return [x / norm for x in d]

"""Temporal error backpropagation and the SGD update.

The firing time is treated as a ReLU-like function of the potential, with
d(time)/d(potential) = -1 for neurons that fired before ``t_max``. A synapse
contributes to the gradient only if its input spike arrived no later than
the postsynaptic spike.
"""

from __future__ import annotations

import numpy as np

from .encoding import SpikeVector
from .errors import DivergenceError, ShapeError
from .forward import ForwardTrace
from .network import LayerParams, NetworkParams
from .objective import compute_error

NORM_EPS = 1e-12


def output_deltas(errors) -> np.ndarray:
    return -np.asarray(errors, dtype=np.float64)


def hidden_deltas(delta_next, w_next, t_here, t_next) -> np.ndarray:
    """Backpropagate through the next layer, gated by causality (t_j <= t_k).

    Fake spikes take part with their time ``t_max``.
    """
    w = w_next.weights if isinstance(w_next, LayerParams) else np.asarray(w_next)
    t_here = np.asarray(getattr(t_here, "times", t_here))
    t_next = np.asarray(getattr(t_next, "times", t_next))
    delta_next = np.asarray(delta_next, dtype=np.float64)
    if w.shape != (len(t_next), len(t_here)) or len(delta_next) != len(t_next):
        raise ShapeError(
            f"hidden_deltas: weights {w.shape}, {len(t_next)} next-layer times, "
            f"{len(t_here)} current-layer times, {len(delta_next)} deltas"
        )
    gate = t_here[None, :] <= t_next[:, None]
    return (delta_next[:, None] * gate * w).sum(axis=0)


def normalize_deltas(delta, eps: float = NORM_EPS, ord: int = 2) -> np.ndarray:
    """Divide by the L2 (or, with ``ord=1``, L1) norm; unchanged when the norm is (near) zero."""
    delta = np.asarray(delta, dtype=np.float64)
    norm = np.abs(delta).sum() if ord == 1 else np.sqrt(np.dot(delta, delta))
    if norm <= eps:
        return delta.copy()
    return delta / norm


def weight_gradients(delta, pre: SpikeVector, post: SpikeVector, t_max: int) -> np.ndarray:
    """dL/dw for one layer: ``-delta_j`` where input i spiked by ``t_j < t_max``, else 0."""
    delta = np.asarray(delta, dtype=np.float64)
    active = post.fired & (post.times < t_max)
    causal = (pre.fired[None, :]) & (pre.times[None, :] <= post.times[:, None])
    return np.where(causal & active[:, None], -delta[:, None], 0.0)


def layer_deltas(
    trace: ForwardTrace,
    params: NetworkParams,
    targets,
    normalize_hidden: bool = True,
    normalize_output: bool = True,
    norm_ord: int = 2,
) -> list[np.ndarray]:
    """Deltas of every layer, output first computed then propagated down.

    Normalized deltas are used both for the layer's own gradient and for
    propagation further down.
    """
    t_max = params.grid.t_max
    n = len(params.layers)
    deltas: list[np.ndarray] = [np.empty(0)] * n
    delta = output_deltas(compute_error(targets, trace.spikes[-1].times, t_max))
    deltas[-1] = normalize_deltas(delta, ord=norm_ord) if normalize_output else delta
    for l in range(n - 2, -1, -1):
        delta = hidden_deltas(deltas[l + 1], params.layers[l + 1], trace.spikes[l + 1], trace.spikes[l + 2])
        deltas[l] = normalize_deltas(delta, ord=norm_ord) if normalize_hidden else delta
    return deltas


def backward(
    trace: ForwardTrace,
    params: NetworkParams,
    targets,
    normalize_hidden: bool = True,
    normalize_output: bool = True,
    norm_ord: int = 2,
) -> list[np.ndarray]:
    """Gradient for every weight layer. Does not touch ``params``.

    ``trace`` must come from a TRAIN-mode pass so every neuron has a time.
    """
    deltas = layer_deltas(trace, params, targets, normalize_hidden, normalize_output, norm_ord)
    t_max = params.grid.t_max
    return [
        weight_gradients(deltas[l], trace.spikes[l], trace.spikes[l + 1], t_max)
        for l in range(len(params.layers))
    ]


def apply_update(params: NetworkParams, grads, eta: float, lam: float = 0.0) -> None:
    """In-place SGD step ``w <- w - eta * (grad + 2 * lam * w)`` on every layer."""
    if len(grads) != len(params.layers):
        raise ShapeError(f"{len(grads)} gradients for {len(params.layers)} layers")
    updated = []
    for k, (layer, g) in enumerate(zip(params.layers, grads)):
        if g.shape != layer.weights.shape:
            raise ShapeError(f"gradient {k} has shape {g.shape}, weights {layer.weights.shape}")
        w = layer.weights - eta * (g + 2.0 * lam * layer.weights)
        if not np.all(np.isfinite(w)):
            raise DivergenceError(f"non-finite weights in layer {k} after update (eta={eta})")
        updated.append(w)
    for layer, w in zip(params.layers, updated):
        layer.weights[...] = w

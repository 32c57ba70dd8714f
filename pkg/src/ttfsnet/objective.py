"""Relative target firing times, temporal error and loss."""

from __future__ import annotations

import numpy as np

from .encoding import SpikeVector
from .errors import ConfigError, ShapeError
from .network import NetworkParams


def relative_targets(output: SpikeVector, correct: int, gamma: int, t_max: int) -> np.ndarray:
    """Targets built around the earliest output spike ``tau``.

    The correct neuron is asked to fire at ``tau``; any other neuron firing
    before ``tau + gamma`` is pushed to ``tau + gamma``; the rest keep their
    own time and so get zero error. When no output neuron fired at all, the
    correct one is asked for ``t_max - gamma`` and the others for ``t_max``.
    """
    if not 0 < gamma < t_max:
        raise ConfigError(f"gamma must satisfy 0 < gamma < t_max={t_max}, got {gamma}")
    times = np.asarray(output.times, dtype=np.int64)
    if not 0 <= correct < len(times):
        raise ShapeError(f"class index {correct} out of range for {len(times)} outputs")

    if not output.fired.any():
        targets = np.full(len(times), t_max, dtype=np.int64)
        targets[correct] = t_max - gamma
        return targets

    # fake times sit at t_max, so including them never lowers tau
    tau = int(times.min())
    # tau + gamma may overshoot the grid when tau is late; targets stay on it
    targets = np.minimum(np.maximum(times, tau + gamma), t_max)
    targets[correct] = tau
    return targets


def compute_error(targets, times, t_max: int) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64)
    times = np.asarray(getattr(times, "times", times), dtype=np.float64)
    if targets.shape != times.shape:
        raise ShapeError(f"targets {targets.shape} and times {times.shape} differ in shape")
    return (targets - times) / t_max


def loss(errors, params: NetworkParams | None = None, lam: float = 0.0) -> float:
    """Half squared error plus ``lam`` times the sum of all squared weights."""
    e = np.asarray(errors, dtype=np.float64)
    value = 0.5 * float(np.dot(e, e))
    if lam and params is not None:
        value += lam * sum(float(np.sum(l.weights**2)) for l in params.layers)
    return value

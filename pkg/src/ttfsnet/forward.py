"""Event-driven forward pass for single-spike non-leaky integrate-and-fire layers.

Potentials are cumulative sums of weights with no leak, so a neuron's first
threshold crossing can only happen at one of the distinct presynaptic spike
times. Each layer therefore sorts its input spikes once and scans each neuron's
running weight sum group by group (spikes sharing a time step are added
together before the threshold test), stopping at the first crossing. No clock
loop over ``t_max`` is needed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._kernels import scan_layer
from .encoding import SimGrid, SpikeVector
from .errors import ShapeError
from .network import LayerParams, NetworkParams


class Mode(enum.Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass
class ForwardTrace:
    """Everything one sample's forward pass produced.

    ``spikes[0]`` is the input layer. ``potentials[k]`` belongs to
    ``spikes[k + 1]``: the membrane potential at the firing step for neurons
    that fired, and the final potential at the end of the simulated window for
    silent ones.
    """

    spikes: list[SpikeVector]
    potentials: list[np.ndarray]
    decision_time: int
    spike_count_at_decision: int

    @property
    def output(self) -> SpikeVector:
        return self.spikes[-1]

    @property
    def decided(self) -> bool:
        return bool(self.output.fired.any())


def forward_layer(
    pre: SpikeVector,
    layer: LayerParams,
    grid: SimGrid,
    mode: Mode = Mode.TRAIN,
    horizon: int | None = None,
) -> tuple[SpikeVector, np.ndarray]:
    """Firing times and potentials-at-fire of one layer.

    Silent neurons get time ``t_max`` with the fake flag set in both modes; in
    TRAIN mode that time is consumed by the learning rule, in TEST mode the
    flag simply reads as "no spike". ``horizon`` stops the simulation after that
    step (used for early stopping at the decision time).
    """
    if len(pre) != layer.n_pre:
        raise ShapeError(f"layer expects {layer.n_pre} inputs, got {len(pre)}")
    order, sorted_t = sorted_live(pre, grid.t_max if horizon is None else min(horizon, grid.t_max))
    times, fake, pot = scan_layer(layer.weights, float(layer.threshold), order, sorted_t, grid.t_max)
    return SpikeVector(times, fake), pot


def sorted_live(pre: SpikeVector, last: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of real input spikes at or before ``last``, in time order, and their times."""
    live = np.flatnonzero(~pre.fake & (pre.times <= last))
    order = live[np.argsort(pre.times[live], kind="stable")]
    return order, pre.times[order].astype(np.int64)


def count_spikes_until(spikes: list[SpikeVector], t: int) -> int:
    return int(sum(np.count_nonzero(s.fired & (s.times <= t)) for s in spikes))


def forward_network(
    inputs: SpikeVector,
    params: NetworkParams,
    mode: Mode = Mode.TRAIN,
    early_stop: bool = False,
    layer_fn=forward_layer,
) -> ForwardTrace:
    """Run all layers for one sample; state is fresh on every call.

    ``early_stop`` (TEST mode only) truncates every layer at the decision time.
    Spikes after the first output spike cannot affect anything at or before
    it, so the decision, class and spike count are unchanged; later neurons
    read as silent.
    """
    if len(inputs) != params.layers[0].n_pre:
        raise ShapeError(f"input has {len(inputs)} neurons, network expects {params.layers[0].n_pre}")
    grid = params.grid
    spikes = [inputs]
    potentials = []
    for layer in params.layers:
        out, pot = layer_fn(spikes[-1], layer, grid, mode)
        spikes.append(out)
        potentials.append(pot)

    output = spikes[-1]
    real = output.fired
    decision = int(output.times[real].min()) if real.any() else grid.t_max
    if early_stop and mode is Mode.TEST and real.any():
        spikes = [inputs]
        potentials = []
        for layer in params.layers:
            out, pot = layer_fn(spikes[-1], layer, grid, mode, horizon=decision)
            spikes.append(out)
            potentials.append(pot)
    count = count_spikes_until(spikes, decision)
    return ForwardTrace(spikes, potentials, decision, count)


def classify(trace: ForwardTrace) -> int:
    """Earliest real output spike wins; ties go to the higher potential, then the lower index.

    With no real output spike, the neuron with the highest final potential wins.
    """
    out = trace.output
    pot = trace.potentials[-1]
    real = out.fired
    if real.any():
        t_win = out.times[real].min()
        candidates = real & (out.times == t_win)
    else:
        candidates = np.ones(len(out), dtype=bool)
    score = np.where(candidates, pot, -np.inf)
    return int(np.argmax(score))

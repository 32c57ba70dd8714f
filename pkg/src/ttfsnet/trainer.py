"""Training loop, dead-neuron revival and evaluation protocols."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from ._kernels import sgd_layer
from .backprop import layer_deltas
from .data import LabeledDataset
from .encoding import SimGrid, apply_jitter, encode_times, input_spikes
from .errors import ConfigError, DivergenceError, InvalidInputError
from .forward import ForwardTrace, Mode, classify, forward_network
from .network import InitSpec, NetworkParams, init_network, reinit_neuron
from .objective import compute_error, relative_targets

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyperparameters. Defaults are the MNIST settings (784-400-10)."""

    arch: list[int] = field(default_factory=lambda: [784, 400, 10])
    epochs: int = 10
    eta: float = 0.2
    gamma: int = 3
    lam: float = 1e-6
    theta: float = 100.0
    grid: SimGrid = field(default_factory=SimGrid)
    init: InitSpec = field(default_factory=lambda: InitSpec([(0.0, 5.0), (0.0, 50.0)], seed=0))
    seed: int = 0
    revive_dead: bool = True
    val_holdout: int = 5000
    normalize_hidden: bool = True
    normalize_output: bool = True
    norm_ord: int = 2
    # let silent output neurons learn from their pinned t_max time
    fake_output_grad: bool = False
    # return the weights of the epoch with the best validation accuracy
    keep_best: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if not 0 < self.gamma < self.grid.t_max:
            raise ConfigError(f"gamma must satisfy 0 < gamma < t_max, got {self.gamma}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.norm_ord not in (1, 2):
            raise ConfigError(f"norm_ord must be 1 or 2, got {self.norm_ord}")
        if len(self.init.ranges) != len(self.arch) - 1:
            raise ConfigError(
                f"{len(self.init.ranges)} init ranges for {len(self.arch) - 1} weight layers"
            )

    def build_network(self) -> NetworkParams:
        return init_network(self.arch, self.init, self.grid, self.theta)


@dataclass
class EvalStats:
    accuracy: float
    mean_decision_time: float
    mean_spikes: float
    msse: float | None = None
    # per class c: mean firing time of output neuron c over samples labelled c
    class_correct_time: list[float] = field(default_factory=list)
    class_spikes: list[float] = field(default_factory=list)
    decided_fraction: float = 1.0
    threshold: float | None = None
    jitter: int = 0

    def to_record(self) -> dict:
        return asdict(self)


@dataclass
class EpochStats:
    epoch: int
    train_msse: float
    train_acc: float
    revived: int
    val_msse: float | None = None
    val_acc: float | None = None
    test_acc: float | None = None
    mean_decision_time: float | None = None
    mean_spikes: float | None = None

    def to_record(self) -> dict:
        return asdict(self)


class FireCounter:
    """Real spikes emitted per non-input neuron during the current epoch."""

    def __init__(self, params: NetworkParams):
        self.counts = [np.zeros(layer.n_post, dtype=np.int64) for layer in params.layers]
        self.samples = 0

    def add(self, trace: ForwardTrace) -> None:
        for c, s in zip(self.counts, trace.spikes[1:]):
            c += s.fired
        self.samples += 1

    def dead(self) -> list[tuple[int, int]]:
        return [(l, int(j)) for l, c in enumerate(self.counts) for j in np.flatnonzero(c == 0)]

    def reset(self) -> None:
        for c in self.counts:
            c[:] = 0
        self.samples = 0


def encode_dataset(ds: LabeledDataset, grid: SimGrid) -> np.ndarray:
    if ds.images.size and int(ds.images.max()) > grid.i_max:
        raise InvalidInputError(f"dataset pixels exceed grid i_max={grid.i_max}")
    return encode_times(ds.images.reshape(len(ds), -1), grid)


def train_step(params: NetworkParams, input_times: np.ndarray, label: int, cfg: TrainConfig):
    """One sample: forward, relative targets, backward, in-place update. Returns (trace, errors).

    Gradients are applied layer by layer without materializing them; the
    result is identical to ``apply_update(params, backward(...))``. If an update
    produces a non-finite weight, DivergenceError is raised and ``params`` is
    left partially updated.

    With ``cfg.fake_output_grad`` the output layer also updates neurons that
    stayed silent, treating the fake spike at ``t_max`` as their firing time.
    """
    trace = forward_network(input_spikes(input_times, params.grid), params, Mode.TRAIN)
    t_max = params.grid.t_max
    targets = relative_targets(trace.output, label, cfg.gamma, t_max)
    deltas = layer_deltas(trace, params, targets, cfg.normalize_hidden, cfg.normalize_output, cfg.norm_ord)
    last = len(params.layers) - 1
    for k, layer in enumerate(params.layers):
        pre, post = trace.spikes[k], trace.spikes[k + 1]
        active = post.fired & (post.times < t_max)
        if cfg.fake_output_grad and k == last:
            active |= post.fake
        if not sgd_layer(layer.weights, deltas[k], post.times, active, pre.times, pre.fired,
                         float(cfg.eta), float(cfg.lam)):
            raise DivergenceError(f"non-finite weights in layer {k} after update (eta={cfg.eta})")
    return trace, compute_error(targets, trace.output.times, t_max)


def train_epoch(
    params: NetworkParams,
    dataset: LabeledDataset,
    cfg: TrainConfig,
    epoch: int = 0,
    counter: FireCounter | None = None,
    rng: np.random.Generator | None = None,
    encoded: np.ndarray | None = None,
) -> EpochStats:
    """SGD over the shuffled dataset, then revive neurons that never fired for real."""
    if len(dataset) == 0:
        raise InvalidInputError("empty training set")
    if dataset.images[0].size != params.layers[0].n_pre:
        raise InvalidInputError(
            f"images have {dataset.images[0].size} pixels, network expects {params.layers[0].n_pre}"
        )
    if rng is None:
        rng = np.random.default_rng([cfg.seed, epoch])
    counter = counter or FireCounter(params)
    counter.reset()
    x = encode_dataset(dataset, params.grid) if encoded is None else encoded

    sse = 0.0
    correct = 0
    for n in rng.permutation(len(dataset)):
        label = int(dataset.labels[n])
        trace, e = train_step(params, x[n], label, cfg)
        counter.add(trace)
        sse += float(np.dot(e, e))
        correct += classify(trace) == label

    revived = 0
    if cfg.revive_dead:
        for layer, neuron in counter.dead():
            reinit_neuron(params, layer, neuron, cfg.init, rng)
            revived += 1
    if revived:
        log.info("epoch %d: revived %d dead neurons", epoch, revived)
    return EpochStats(
        epoch=epoch, train_msse=sse / len(dataset), train_acc=correct / len(dataset), revived=revived
    )


def evaluate(
    params: NetworkParams,
    dataset: LabeledDataset,
    threshold: float | None = None,
    jitter: int = 0,
    rng: np.random.Generator | int | None = 0,
    engine: str = "event",
    gamma: int | None = None,
) -> EvalStats:
    """TEST-mode pass over a dataset. Never modifies ``params``.

    ``threshold`` replaces every layer's threshold for this evaluation only.
    ``jitter`` adds uniform integer pixel noise. Samples with no output spike
    count with decision time ``t_max``. When ``gamma`` is given, the mean
    summed squared error against relative targets is reported as ``msse``.
    """
    net = params.with_threshold(threshold) if threshold is not None else params
    grid = net.grid
    if engine == "event":
        run = forward_network
    elif engine == "reference":
        from .reference import dense_forward_network as run
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    if jitter:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        images = np.stack([apply_jitter(img, jitter, rng, grid.i_max) for img in dataset.images])
    else:
        images = dataset.images
    x = encode_times(images.reshape(len(dataset), -1), grid)

    C = dataset.class_count
    hits = 0
    decisions = np.empty(len(dataset))
    spikes = np.empty(len(dataset))
    decided = 0
    correct_time = np.empty(len(dataset))
    sse = 0.0
    for n in range(len(dataset)):
        label = int(dataset.labels[n])
        trace = run(input_spikes(x[n], grid), net, Mode.TEST)
        hits += classify(trace) == label
        decisions[n] = trace.decision_time
        spikes[n] = trace.spike_count_at_decision
        decided += trace.decided
        correct_time[n] = trace.output.times[label]
        if gamma is not None:
            targets = relative_targets(trace.output, label, gamma, grid.t_max)
            e = compute_error(targets, trace.output.times, grid.t_max)
            sse += float(np.dot(e, e))

    labels = dataset.labels
    per_time = [float(correct_time[labels == c].mean()) if np.any(labels == c) else float("nan") for c in range(C)]
    per_spk = [float(spikes[labels == c].mean()) if np.any(labels == c) else float("nan") for c in range(C)]
    return EvalStats(
        accuracy=hits / len(dataset),
        mean_decision_time=float(decisions.mean()),
        mean_spikes=float(spikes.mean()),
        msse=sse / len(dataset) if gamma is not None else None,
        class_correct_time=per_time,
        class_spikes=per_spk,
        decided_fraction=decided / len(dataset),
        threshold=threshold,
        jitter=jitter,
    )


def predict(params: NetworkParams, dataset: LabeledDataset, engine: str = "event") -> np.ndarray:
    if engine == "reference":
        from .reference import dense_forward_network as run
    else:
        run = forward_network
    x = encode_times(dataset.images.reshape(len(dataset), -1), params.grid)
    return np.array([classify(run(input_spikes(row, params.grid), params, Mode.TEST)) for row in x])


def sweep_threshold(
    params: NetworkParams, dataset: LabeledDataset, thresholds: Iterable[float], **kwargs
) -> list[tuple[float, EvalStats]]:
    rows = []
    for theta in thresholds:
        if not theta > 0:
            raise ConfigError(f"thresholds must be > 0, got {theta}")
        rows.append((theta, evaluate(params, dataset, threshold=theta, **kwargs)))
    return rows


def train(
    cfg: TrainConfig,
    train_set: LabeledDataset,
    val_set: LabeledDataset | None = None,
    test_set: LabeledDataset | None = None,
    params: NetworkParams | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> tuple[NetworkParams, list[EpochStats]]:
    """Full run. The test set, if given, is evaluated once after the last epoch.

    With ``cfg.keep_best`` and a non-empty validation set, the returned (and
    test-evaluated) weights are those of the epoch with the highest validation
    accuracy, earliest on ties.
    """
    if params is None:
        params = cfg.build_network()
    if params.arch[0] != train_set.images[0].size or params.n_classes != train_set.class_count:
        raise ConfigError(
            f"arch {params.arch} does not fit {train_set.shape} images with {train_set.class_count} classes"
        )
    counter = FireCounter(params)
    x = encode_dataset(train_set, params.grid)
    history = []
    select = cfg.keep_best and val_set is not None and len(val_set) > 0
    best, best_acc, best_epoch = None, -1.0, -1
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, epoch])
        stats = train_epoch(params, train_set, cfg, epoch, counter, rng, encoded=x)
        if val_set is not None and len(val_set):
            v = evaluate(params, val_set, gamma=cfg.gamma)
            stats.val_msse, stats.val_acc = v.msse, v.accuracy
            if select and v.accuracy > best_acc:
                best, best_acc, best_epoch = params.copy(), v.accuracy, epoch
        if select and epoch == cfg.epochs - 1:
            log.info("keeping epoch %d (val_acc=%.4f)", best_epoch, best_acc)
            params = best
        if test_set is not None and epoch == cfg.epochs - 1:
            t = evaluate(params, test_set)
            stats.test_acc = t.accuracy
            stats.mean_decision_time = t.mean_decision_time
            stats.mean_spikes = t.mean_spikes
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return params, history

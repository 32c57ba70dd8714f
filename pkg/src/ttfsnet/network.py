"""Network parameters, initialization, neuron revival and checkpoint files."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoding import SimGrid
from .errors import CheckpointError, ConfigError, ShapeError

CHECKPOINT_MAGIC = b"S4NN"
CHECKPOINT_VERSION = 1


@dataclass
class LayerParams:
    """Dense weights of shape (n_post, n_pre) and one threshold for the layer."""

    weights: np.ndarray
    threshold: float = 100.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or 0 in self.weights.shape:
            raise ShapeError(f"weights must be a non-empty 2-D matrix, got shape {self.weights.shape}")
        if not self.threshold > 0:
            raise ConfigError(f"threshold must be > 0, got {self.threshold}")

    @property
    def n_post(self) -> int:
        return self.weights.shape[0]

    @property
    def n_pre(self) -> int:
        return self.weights.shape[1]


@dataclass
class InitSpec:
    """One uniform range ``(lo, hi)`` per weight layer, plus the draw seed."""

    ranges: list[tuple[float, float]]
    seed: int = 0

    def __post_init__(self):
        for k, (lo, hi) in enumerate(self.ranges):
            if lo > hi:
                raise ConfigError(f"init range for layer {k} has lo > hi: [{lo}, {hi}]")


@dataclass
class NetworkParams:
    layers: list[LayerParams]
    grid: SimGrid = field(default_factory=SimGrid)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.layers:
            raise ShapeError("network needs at least one weight layer")
        for k in range(len(self.layers) - 1):
            if self.layers[k].n_post != self.layers[k + 1].n_pre:
                raise ShapeError(
                    f"layer {k} has {self.layers[k].n_post} outputs but layer {k + 1} "
                    f"expects {self.layers[k + 1].n_pre} inputs"
                )

    @property
    def arch(self) -> list[int]:
        return [self.layers[0].n_pre] + [layer.n_post for layer in self.layers]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].n_post

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [LayerParams(l.weights.copy(), l.threshold) for l in self.layers], self.grid
        )

    def with_threshold(self, threshold: float) -> "NetworkParams":
        """View sharing the weight arrays but with every layer's threshold replaced."""
        return NetworkParams([LayerParams(l.weights, threshold) for l in self.layers], self.grid)


def init_network(
    arch: Sequence[int],
    spec: InitSpec,
    grid: SimGrid | None = None,
    threshold: float | Sequence[float] = 100.0,
) -> NetworkParams:
    """Draw every weight i.i.d. uniform in its layer's range, reproducibly from ``spec.seed``."""
    arch = [int(n) for n in arch]
    if len(arch) < 2 or min(arch) < 1:
        raise ConfigError(f"arch needs >= 2 positive layer sizes, got {arch}")
    n_layers = len(arch) - 1
    if len(spec.ranges) != n_layers:
        raise ConfigError(
            f"InitSpec has {len(spec.ranges)} weight ranges but arch {arch} has {n_layers} weight layers"
        )
    thresholds = [threshold] * n_layers if np.isscalar(threshold) else list(threshold)
    if len(thresholds) != n_layers:
        raise ConfigError("one threshold per weight layer expected")
    rng = np.random.default_rng(spec.seed)
    layers = []
    for k in range(n_layers):
        lo, hi = spec.ranges[k]
        w = rng.uniform(lo, hi, size=(arch[k + 1], arch[k]))
        layers.append(LayerParams(w, float(thresholds[k])))
    return NetworkParams(layers, grid or SimGrid())


def reinit_neuron(
    params: NetworkParams, layer: int, neuron: int, spec: InitSpec, rng: np.random.Generator
) -> None:
    """Redraw the incoming weights of one neuron from its layer's initial range."""
    if not 0 <= layer < len(params.layers):
        raise IndexError(f"layer index {layer} out of range")
    w = params.layers[layer].weights
    if not 0 <= neuron < w.shape[0]:
        raise IndexError(f"neuron index {neuron} out of range for layer {layer}")
    lo, hi = spec.ranges[layer]
    w[neuron] = rng.uniform(lo, hi, size=w.shape[1])


# Checkpoint layout, little-endian:
#   b"S4NN", u32 version, u32 n_layers,
#   per layer: u32 n_pre, u32 n_post, f32 threshold, f32[n_post * n_pre] row-major.


def checkpoint_bytes(params: NetworkParams) -> bytes:
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(params.layers))]
    for layer in params.layers:
        parts.append(struct.pack("<IIf", layer.n_pre, layer.n_post, layer.threshold))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
    return b"".join(parts)


def save_checkpoint(params: NetworkParams, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(params))


def parse_checkpoint(data: bytes, grid: SimGrid | None = None) -> NetworkParams:
    if len(data) < 12:
        raise CheckpointError("checkpoint truncated: header needs 12 bytes")
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {data[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 12
    layers = []
    for k in range(n_layers):
        if pos + 12 > len(data):
            raise CheckpointError(f"checkpoint truncated in header of layer {k} at byte {pos}")
        n_pre, n_post, threshold = struct.unpack_from("<IIf", data, pos)
        pos += 12
        nbytes = 4 * n_pre * n_post
        if pos + nbytes > len(data):
            raise CheckpointError(f"checkpoint truncated in weights of layer {k} at byte {pos}")
        w = np.frombuffer(data, dtype="<f4", count=n_pre * n_post, offset=pos)
        pos += nbytes
        layers.append(LayerParams(w.reshape(n_post, n_pre).astype(np.float64), float(threshold)))
    if pos != len(data):
        raise CheckpointError(f"{len(data) - pos} trailing bytes after last layer")
    try:
        return NetworkParams(layers, grid or SimGrid())
    except ShapeError as exc:
        raise CheckpointError(f"inconsistent layer shapes: {exc}") from exc


def load_checkpoint(path, grid: SimGrid | None = None) -> NetworkParams:
    """Load a checkpoint. The file does not store the time grid, so pass it if not the default."""
    return parse_checkpoint(Path(path).read_bytes(), grid)

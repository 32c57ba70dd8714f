"""Intensity-to-latency encoding and input noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class SimGrid:
    """Discrete simulation grid: times are the integers 0..t_max inclusive.

    With ``zero_fires`` off, intensity-0 pixels produce no input spike at all
    instead of a real spike on the last step.
    """

    t_max: int = 256
    i_max: int = 255
    zero_fires: bool = True

    def __post_init__(self):
        if self.t_max < 1:
            raise InvalidInputError(f"t_max must be >= 1, got {self.t_max}")
        if self.i_max < 1:
            raise InvalidInputError(f"i_max must be >= 1, got {self.i_max}")


@dataclass
class SpikeVector:
    """First-spike time of every neuron in a layer.

    ``fake[i]`` marks a neuron that never reached threshold; its time is then
    pinned to ``t_max``. Fake spikes exist for the learning rule only and never
    drive downstream potentials.
    """

    times: np.ndarray
    fake: np.ndarray

    @classmethod
    def real(cls, times) -> "SpikeVector":
        times = np.asarray(times, dtype=np.int64)
        return cls(times, np.zeros(times.shape, dtype=bool))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def fired(self) -> np.ndarray:
        return ~self.fake

    def copy(self) -> "SpikeVector":
        return SpikeVector(self.times.copy(), self.fake.copy())


def _check_pixels(pixels: np.ndarray, i_max: int) -> np.ndarray:
    if pixels.dtype.kind not in "iu":
        if not np.all(np.isfinite(pixels)) or np.any(pixels != np.round(pixels)):
            raise InvalidInputError("pixel intensities must be integers")
    lo, hi = (pixels.min(), pixels.max()) if pixels.size else (0, 0)
    if lo < 0 or hi > i_max:
        raise InvalidInputError(
            f"pixel intensity out of range [0, {i_max}]: min={lo}, max={hi}"
        )
    return pixels.astype(np.int64)


def encode_times(pixels, grid: SimGrid) -> np.ndarray:
    """Latency for every pixel of an array of any shape (batched encoding).

    Uses exact integer arithmetic, so ``floor((I_max - I) * t_max / I_max)``
    carries no float rounding.
    """
    pix = _check_pixels(np.asarray(pixels), grid.i_max)
    return ((grid.i_max - pix) * grid.t_max) // grid.i_max


def input_spikes(times, grid: SimGrid) -> SpikeVector:
    """Wrap encoded latencies as an input layer, honouring ``grid.zero_fires``."""
    times = np.asarray(times, dtype=np.int64)
    if grid.zero_fires:
        return SpikeVector.real(times)
    return SpikeVector(times, times >= grid.t_max)


def encode_image(image, grid: SimGrid) -> SpikeVector:
    """Encode one grayscale image (row-major) as a single-spike input layer.

    Brighter pixels fire earlier; intensity 0 fires at ``t_max``, which is a
    real spike on the last simulated step (unless ``grid.zero_fires`` is off).
    """
    return input_spikes(encode_times(image, grid).ravel(), grid)


def apply_jitter(image, jitter: int, rng: np.random.Generator, i_max: int = 255) -> np.ndarray:
    """Add independent uniform integer noise in [-jitter, jitter] and clamp."""
    if jitter < 0:
        raise InvalidInputError(f"jitter must be >= 0, got {jitter}")
    img = np.asarray(image)
    if jitter == 0:
        return img.copy()
    noise = rng.integers(-jitter, jitter + 1, size=img.shape)
    return np.clip(img.astype(np.int64) + noise, 0, i_max).astype(img.dtype)

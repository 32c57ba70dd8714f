"""Dataset ingestion: MNIST IDX files and directories of binary PGM images."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidInputError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
I_MAX = 255


@dataclass
class LabeledDataset:
    """Images as a uint8 array of shape (N, height, width) plus integer labels."""

    images: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        self.images = np.asarray(self.images)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3:
            raise InvalidInputError(f"images must have shape (N, H, W), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise InvalidInputError(f"{len(self.images)} images but {len(self.labels)} labels")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise InvalidInputError(f"labels must lie in [0, {self.class_count})")
        if self.images.size and (self.images.min() < 0 or self.images.max() > I_MAX):
            raise InvalidInputError(f"pixel values must lie in [0, {I_MAX}]")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.images.shape[1], self.images.shape[2]

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.images[index], self.labels[index], self.class_count)


def _read_idx(path, expected_magic: int, header_ints: int) -> tuple[list[int], bytes]:
    data = Path(path).read_bytes()
    header_len = 4 * (1 + header_ints)
    if len(data) < header_len:
        raise DataFormatError("IDX header truncated", path, len(data))
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic != expected_magic:
        raise DataFormatError(
            f"bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}", path, 0
        )
    dims = list(struct.unpack_from(f">{header_ints}I", data, 4))
    return dims, data[header_len:]


def load_idx_images(path) -> np.ndarray:
    (count, rows, cols), body = _read_idx(path, IDX_IMAGES_MAGIC, 3)
    need = count * rows * cols
    if len(body) < need:
        raise DataFormatError(
            f"pixel section truncated: expected {need} bytes, found {len(body)}", path, 16 + len(body)
        )
    return np.frombuffer(body, dtype=np.uint8, count=need).reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    (count,), body = _read_idx(path, IDX_LABELS_MAGIC, 1)
    if len(body) < count:
        raise DataFormatError(
            f"label section truncated: expected {count} bytes, found {len(body)}", path, 8 + len(body)
        )
    return np.frombuffer(body, dtype=np.uint8, count=count).astype(np.int64)


def load_idx(images_path, labels_path, class_count: int | None = None) -> LabeledDataset:
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if len(images) != len(labels):
        raise DataFormatError(f"{len(images)} images but {len(labels)} labels", labels_path)
    if class_count is None:
        class_count = int(labels.max()) + 1 if labels.size else 0
    return LabeledDataset(images, labels, class_count)


def load_mnist_dir(root, split: str = "train") -> LabeledDataset:
    """Load ``train`` or ``t10k`` from a directory holding the four MNIST IDX files."""
    root = Path(root)
    prefix = {"train": "train", "test": "t10k", "t10k": "t10k"}[split]
    found = {}
    for kind in ("images", "labels"):
        ndim = 3 if kind == "images" else 1
        candidates = [root / f"{prefix}-{kind}-idx{ndim}-ubyte", root / f"{prefix}-{kind}.idx{ndim}-ubyte"]
        for c in candidates:
            if c.exists():
                found[kind] = c
                break
        else:
            raise FileNotFoundError(f"no {prefix} {kind} IDX file in {root}")
    return load_idx(found["images"], found["labels"], class_count=10)


def _pgm_tokens(data: bytes, path):
    # header: magic, width, height, maxval separated by whitespace, '#' comments allowed
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DataFormatError("PGM header truncated", path, pos)
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM into a (height, width) uint8 array."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, path)
    if tokens[0] != b"P5":
        raise DataFormatError(f"not a binary PGM (magic {tokens[0]!r})", path, 0)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataFormatError("non-integer PGM header field", path) from None
    if maxval != 255:
        raise DataFormatError(f"PGM maxval must be 255, got {maxval}", path)
    need = width * height
    if len(data) - offset < need:
        raise DataFormatError(
            f"PGM raster truncated: expected {need} bytes, found {len(data) - offset}", path, len(data)
        )
    return np.frombuffer(data, dtype=np.uint8, count=need, offset=offset).reshape(height, width)


def write_pgm(path, pixels) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise InvalidInputError(f"PGM needs a 2-D array, got shape {pixels.shape}")
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.clip(pixels, 0, 255).astype(np.uint8).tobytes())


def load_pgm_dir(root) -> LabeledDataset:
    """One subdirectory per class; class index is the sorted rank of the subdirectory name."""
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataFormatError("no class subdirectories found", root)
    images, labels = [], []
    shape = None
    for label, d in enumerate(class_dirs):
        files = sorted(p for p in d.iterdir() if p.is_file() and not p.name.startswith("."))
        if not files:
            raise DataFormatError(f"class directory {d.name!r} is empty", d)
        for f in files:
            img = read_pgm(f)
            if shape is None:
                shape = img.shape
            elif img.shape != shape:
                raise DataFormatError(
                    f"image is {img.shape[1]}x{img.shape[0]}, expected {shape[1]}x{shape[0]}", f
                )
            images.append(img)
            labels.append(label)
    return LabeledDataset(np.stack(images), np.array(labels), len(class_dirs))


def split(ds: LabeledDataset, holdout: int, seed: int | None = None):
    """Partition into (rest, holdout).

    With ``seed=None`` the last ``holdout`` samples are held out; otherwise the
    held-out samples are a seeded random choice. Both parts keep original order.
    """
    if not 0 <= holdout < len(ds):
        raise InvalidInputError(f"holdout must be in [0, {len(ds)}), got {holdout}")
    if seed is None:
        keep = np.arange(len(ds) - holdout)
        held = np.arange(len(ds) - holdout, len(ds))
    else:
        perm = np.random.default_rng(seed).permutation(len(ds))
        held = np.sort(perm[:holdout])
        keep = np.sort(perm[holdout:])
    return ds.subset(keep), ds.subset(held)

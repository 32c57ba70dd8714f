"""Command-line interface: ``ttfsnet train | eval | sweep | inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .data import LabeledDataset, load_idx, load_mnist_dir, load_pgm_dir, split, write_pgm
from .encoding import SimGrid
from .errors import ConfigError, TTFSError
from .network import load_checkpoint, save_checkpoint
from .trainer import EpochStats, evaluate, sweep_threshold, train

log = logging.getLogger("ttfsnet")


class JsonLines:
    def __init__(self, path=None):
        self.fh = open(path, "w") if path else sys.stdout
        self.close_fh = bool(path)

    def write(self, record: dict) -> None:
        self.fh.write(json.dumps(record) + "\n")
        self.fh.flush()

    def close(self):
        if self.close_fh:
            self.fh.close()


def add_data_args(p: argparse.ArgumentParser, train: bool):
    g = p.add_argument_group("data")
    g.add_argument("--mnist-dir", help="directory with the four MNIST IDX files")
    g.add_argument("--images", help="IDX image file (evaluation set)")
    g.add_argument("--labels", help="IDX label file (evaluation set)")
    g.add_argument("--pgm-dir", help="directory with one subdirectory of P5 PGMs per class (evaluation set)")
    if train:
        g.add_argument("--train-images")
        g.add_argument("--train-labels")
        g.add_argument("--train-pgm-dir")
    g.add_argument("--limit", type=int, help="use only the first N samples of each set")


def _limit(ds, n):
    return ds if ds is None or n is None else ds.subset(np.arange(min(n, len(ds))))


def eval_dataset(args) -> LabeledDataset:
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise ConfigError("--images and --labels must be given together")
        ds = load_idx(args.images, args.labels)
    elif args.pgm_dir:
        ds = load_pgm_dir(args.pgm_dir)
    elif args.mnist_dir:
        ds = load_mnist_dir(args.mnist_dir, "test")
    else:
        raise ConfigError("no evaluation data: pass --mnist-dir, --images/--labels or --pgm-dir")
    return _limit(ds, args.limit)


def train_dataset(args) -> tuple[LabeledDataset, bool]:
    """Returns the training set and whether it has a meaningful order (IDX) for a tail holdout."""
    if args.train_images or args.train_labels:
        if not (args.train_images and args.train_labels):
            raise ConfigError("--train-images and --train-labels must be given together")
        return _limit(load_idx(args.train_images, args.train_labels), args.limit), True
    if args.train_pgm_dir:
        return _limit(load_pgm_dir(args.train_pgm_dir), args.limit), False
    if args.mnist_dir:
        return _limit(load_mnist_dir(args.mnist_dir, "train"), args.limit), True
    raise ConfigError("no training data: pass --mnist-dir, --train-images/--train-labels or --train-pgm-dir")


def _has_eval_data(args) -> bool:
    return bool(args.images or args.pgm_dir or args.mnist_dir)


def cmd_train(args) -> int:
    cfg = config_mod.load_config(args.config, seed=args.seed, epochs=args.epochs)
    if args.print_config:
        sys.stdout.write(config_mod.format_config(cfg))
        return 0
    train_set, ordered = train_dataset(args)
    test_set = eval_dataset(args) if _has_eval_data(args) else None
    val_set = None
    if cfg.val_holdout:
        if cfg.val_holdout >= len(train_set):
            raise ConfigError(f"val_holdout={cfg.val_holdout} leaves no training samples")
        train_set, val_set = split(train_set, cfg.val_holdout, seed=None if ordered else cfg.seed)
    log.info("training on %d samples, validating on %d", len(train_set), len(val_set) if val_set else 0)

    out = JsonLines(args.metrics)
    try:
        def emit(stats: EpochStats):
            out.write(stats.to_record())
            log.info("epoch %d: train_acc=%.4f train_msse=%.5f val_acc=%s revived=%d",
                     stats.epoch, stats.train_acc, stats.train_msse, stats.val_acc, stats.revived)

        params, history = train(cfg, train_set, val_set, test_set, on_epoch=emit)
    finally:
        out.close()
    if args.out:
        save_checkpoint(params, args.out)
        log.info("wrote checkpoint %s", args.out)
    final = history[-1]
    if final.test_acc is not None:
        print(f"test accuracy: {final.test_acc:.4f}", file=sys.stderr)
    return 0


def _grid(args) -> SimGrid:
    return SimGrid(t_max=args.t_max, zero_fires=not args.silent_zeros)


def cmd_eval(args) -> int:
    params = load_checkpoint(args.checkpoint, _grid(args))
    ds = eval_dataset(args)
    stats = evaluate(params, ds, threshold=args.threshold, jitter=args.jitter,
                     rng=args.jitter_seed, engine=args.engine)
    record = {"checkpoint": str(args.checkpoint), "engine": args.engine, "samples": len(ds), **stats.to_record()}
    print(json.dumps(record))
    return 0


def parse_range(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"threshold range must be lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"threshold range must be numeric, got {text!r}") from None
    if step <= 0:
        raise ConfigError(f"threshold step must be > 0, got {step}")
    if hi < lo:
        raise ConfigError(f"threshold range is empty: {text!r}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    values = [lo + k * step for k in range(n)]
    return [int(v) if float(v).is_integer() else v for v in values]


def cmd_sweep(args) -> int:
    thresholds = parse_range(args.thresholds)
    params = load_checkpoint(args.checkpoint, _grid(args))
    ds = eval_dataset(args)
    out = JsonLines(args.metrics)
    try:
        for theta, stats in sweep_threshold(params, ds, thresholds, jitter=args.jitter,
                                            rng=args.jitter_seed, engine=args.engine):
            out.write(stats.to_record())
    finally:
        out.close()
    return 0


def _image_shape(n: int, text: str | None) -> tuple[int, int]:
    if text:
        try:
            h, w = (int(v) for v in text.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--shape must look like HxW, got {text!r}") from None
        if h * w != n:
            raise ConfigError(f"--shape {h}x{w} has {h * w} pixels, weight rows have {n}")
        return h, w
    side = int(round(np.sqrt(n)))
    if side * side != n:
        raise ConfigError(f"weight rows have {n} entries; pass --shape HxW")
    return side, side


def cmd_inspect(args) -> int:
    params = load_checkpoint(args.checkpoint)
    w = params.layers[0].weights
    h, wd = _image_shape(w.shape[1], args.shape)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for j, row in enumerate(w):
        lo, hi = row.min(), row.max()
        if hi > lo:
            pix = np.round((row - lo) / (hi - lo) * 255)
        else:
            pix = np.full(row.shape, 128)
        write_pgm(out / f"neuron_{j:03d}.pgm", pix.reshape(h, wd))
        counts, edges = np.histogram(row, bins=args.bins)
        with open(out / f"neuron_{j:03d}_hist.csv", "w") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for c, a, b in zip(counts, edges[:-1], edges[1:]):
                fh.write(f"{a!r},{b!r},{c}\n")
    log.info("wrote %d weight images to %s", len(w), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttfsnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a network and write a checkpoint")
    p.add_argument("--config", help="key = value config file (defaults: MNIST settings)")
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--metrics", help="JSON-lines metrics file (default: stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--epochs", type=int, help="override the config epoch count")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    add_data_args(p, train=True)
    p.set_defaults(func=cmd_train)

    for name, func, help_text in (
        ("eval", cmd_eval, "evaluate a checkpoint"),
        ("sweep", cmd_sweep, "evaluate a checkpoint over a range of thresholds"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("checkpoint")
        p.add_argument("--t-max", type=int, default=256)
        p.add_argument("--silent-zeros", action="store_true",
                       help="intensity-0 pixels do not spike (match a model trained with zero_fires = false)")
        p.add_argument("--jitter", type=int, default=0, help="uniform pixel noise amplitude J")
        p.add_argument("--jitter-seed", type=int, default=0)
        p.add_argument("--engine", choices=["event", "reference"], default="event")
        if name == "eval":
            p.add_argument("--threshold", type=float, help="override every layer's threshold")
        else:
            p.add_argument("--thresholds", required=True, help="lo:hi:step, inclusive")
            p.add_argument("--metrics", help="JSON-lines output file (default: stdout)")
        add_data_args(p, train=False)
        p.set_defaults(func=func)

    p = sub.add_parser("inspect", help="dump first-layer weights as PGM images and histograms")
    p.add_argument("checkpoint")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--shape", help="HxW of the input images (default: square)")
    p.add_argument("--bins", type=int, default=64)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (TTFSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())

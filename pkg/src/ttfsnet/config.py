"""Flat ``key = value`` configuration files.

Recognized keys (defaults are the MNIST settings)::

    arch = 784,400,10
    t_max = 256
    theta = 100
    eta = 0.2
    gamma = 3
    lambda = 1e-6
    epochs = 10
    init_lo_1 = 0      # first weight layer (input -> hidden)
    init_hi_1 = 5
    init_lo_2 = 0
    init_hi_2 = 50
    seed = 0
    val_holdout = 5000

plus ``normalize_hidden``/``normalize_output`` (true/false), ``norm`` (l1/l2), ``revive_dead``,
``zero_fires`` (intensity 0 spikes at t_max), ``fake_output_grad`` (silent output neurons
learn) and ``keep_best`` (return the best-validation epoch), all true/false except ``norm``. ``init_lo_K``/``init_hi_K`` for K >= 3 have no default.
"""

from __future__ import annotations

from pathlib import Path

from .encoding import SimGrid
from .errors import ConfigError
from .network import InitSpec
from .trainer import TrainConfig

DEFAULTS = {
    "arch": "784,400,10",
    "t_max": "256",
    "theta": "100",
    "eta": "0.2",
    "gamma": "3",
    "lambda": "1e-6",
    "epochs": "10",
    "init_lo_1": "0",
    "init_hi_1": "5",
    "init_lo_2": "0",
    "init_hi_2": "50",
    "seed": "0",
    "val_holdout": "5000",
    "normalize_hidden": "true",
    "normalize_output": "true",
    "norm": "l2",
    "revive_dead": "true",
    "zero_fires": "true",
    "fake_output_grad": "false",
    "keep_best": "false",
}
_SCALAR_KEYS = set(DEFAULTS) - {k for k in DEFAULTS if k.startswith("init_")}


def parse_lines(text: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        values[key] = value
    return values


def _bool(key, value):
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _num(key, value, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def build_config(values: dict[str, str], **overrides) -> TrainConfig:
    """Merge ``values`` over the defaults and build a validated TrainConfig."""
    merged = {**DEFAULTS, **values, **{k: str(v) for k, v in overrides.items() if v is not None}}
    arch = [_num("arch", a.strip(), int) for a in merged["arch"].split(",") if a.strip()]
    if len(arch) < 2:
        raise ConfigError(f"arch: need at least two layer sizes, got {merged['arch']!r}")
    n_layers = len(arch) - 1
    allowed = _SCALAR_KEYS | {f"init_{b}_{k}" for b in ("lo", "hi") for k in range(1, n_layers + 1)}
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    ranges = []
    for k in range(1, n_layers + 1):
        pair = []
        for bound in ("lo", "hi"):
            key = f"init_{bound}_{k}"
            if key not in merged:
                raise ConfigError(f"missing config key {key!r} (no default for weight layer {k})")
            pair.append(_num(key, merged[key], float))
        ranges.append(tuple(pair))

    norm = merged["norm"].lower()
    if norm not in ("l1", "l2"):
        raise ConfigError(f"norm: expected l1 or l2, got {merged['norm']!r}")
    seed = _num("seed", merged["seed"], int)
    return TrainConfig(
        arch=arch,
        epochs=_num("epochs", merged["epochs"], int),
        eta=_num("eta", merged["eta"], float),
        gamma=_num("gamma", merged["gamma"], int),
        lam=_num("lambda", merged["lambda"], float),
        theta=_num("theta", merged["theta"], float),
        grid=SimGrid(t_max=_num("t_max", merged["t_max"], int),
                     zero_fires=_bool("zero_fires", merged["zero_fires"])),
        init=InitSpec(ranges, seed=seed),
        seed=seed,
        revive_dead=_bool("revive_dead", merged["revive_dead"]),
        val_holdout=_num("val_holdout", merged["val_holdout"], int),
        normalize_hidden=_bool("normalize_hidden", merged["normalize_hidden"]),
        normalize_output=_bool("normalize_output", merged["normalize_output"]),
        norm_ord=1 if norm == "l1" else 2,
        fake_output_grad=_bool("fake_output_grad", merged["fake_output_grad"]),
        keep_best=_bool("keep_best", merged["keep_best"]),
    )


def load_config(path=None, **overrides) -> TrainConfig:
    values = parse_lines(Path(path).read_text()) if path else {}
    return build_config(values, **overrides)


def format_config(cfg: TrainConfig) -> str:
    lines = [
        f"arch = {','.join(str(n) for n in cfg.arch)}",
        f"t_max = {cfg.grid.t_max}",
        f"theta = {cfg.theta!r}",
        f"eta = {cfg.eta!r}",
        f"gamma = {cfg.gamma}",
        f"lambda = {cfg.lam!r}",
        f"epochs = {cfg.epochs}",
    ]
    for k, (lo, hi) in enumerate(cfg.init.ranges, 1):
        lines += [f"init_lo_{k} = {lo!r}", f"init_hi_{k} = {hi!r}"]
    lines += [
        f"seed = {cfg.seed}",
        f"val_holdout = {cfg.val_holdout}",
        f"normalize_hidden = {str(cfg.normalize_hidden).lower()}",
        f"normalize_output = {str(cfg.normalize_output).lower()}",
        f"norm = l{cfg.norm_ord}",
        f"revive_dead = {str(cfg.revive_dead).lower()}",
        f"zero_fires = {str(cfg.grid.zero_fires).lower()}",
        f"fake_output_grad = {str(cfg.fake_output_grad).lower()}",
        f"keep_best = {str(cfg.keep_best).lower()}",
    ]
    return "\n".join(lines) + "\n"

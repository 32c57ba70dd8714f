import pytest

from ttfsnet.config import build_config, format_config, load_config, parse_lines
from ttfsnet.errors import ConfigError


def test_defaults_are_mnist_settings():
    cfg = build_config({})
    assert cfg.arch == [784, 400, 10]
    assert cfg.grid.t_max == 256
    assert (cfg.theta, cfg.eta, cfg.gamma, cfg.lam) == (100.0, 0.2, 3, 1e-6)
    assert cfg.init.ranges == [(0.0, 5.0), (0.0, 50.0)]
    assert cfg.val_holdout == 5000


def test_parse_lines_comments_and_blanks():
    text = "# header\n\narch = 4, 3,2   # trailing\n eta=0.5\n"
    assert parse_lines(text) == {"arch": "4, 3,2", "eta": "0.5"}
    with pytest.raises(ConfigError, match="line 1"):
        parse_lines("no equals sign")


def test_format_round_trip(tmp_path):
    cfg = build_config({"arch": "16,5,3", "init_lo_1": "-1", "init_hi_1": "2.5", "eta": "0.125",
                        "seed": "7", "norm": "l1", "normalize_output": "false",
                        "zero_fires": "false", "fake_output_grad": "true", "keep_best": "true"})
    path = tmp_path / "a.cfg"
    path.write_text(format_config(cfg))
    again = load_config(path)
    assert again == cfg
    assert not again.grid.zero_fires and again.fake_output_grad and again.keep_best
    assert format_config(again) == format_config(cfg)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key.*learning_rate"):
        build_config({"learning_rate": "0.1"})


def test_missing_init_key_is_named():
    # a third weight layer has no default range
    with pytest.raises(ConfigError, match="init_lo_3"):
        build_config({"arch": "784,400,100,10"})
    cfg = build_config({"arch": "784,400,100,10", "init_lo_3": "0", "init_hi_3": "10"})
    assert cfg.init.ranges[2] == (0.0, 10.0)


@pytest.mark.parametrize(
    "values",
    [
        {"eta": "0"},
        {"epochs": "0"},
        {"gamma": "256"},
        {"lambda": "-1"},
        {"eta": "fast"},
        {"norm": "l3"},
        {"revive_dead": "maybe"},
        {"arch": "784"},
    ],
)
def test_invalid_values(values):
    with pytest.raises(ConfigError):
        build_config(values)


def test_overrides_win():
    cfg = build_config({"seed": "1", "epochs": "4"}, seed=9, epochs=None)
    assert cfg.seed == 9 and cfg.init.seed == 9 and cfg.epochs == 4

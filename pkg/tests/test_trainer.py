import numpy as np
import pytest

from conftest import quadrant_images
from ttfsnet.encoding import SimGrid
from ttfsnet.errors import ConfigError, DivergenceError
from ttfsnet.forward import Mode, forward_network
from ttfsnet.network import InitSpec, LayerParams, NetworkParams
from ttfsnet.trainer import (
    FireCounter,
    TrainConfig,
    encode_dataset,
    evaluate,
    predict,
    sweep_threshold,
    train,
    train_epoch,
    train_step,
)
from ttfsnet.encoding import SpikeVector, encode_times, input_spikes


def toy_config(**kw):
    base = dict(arch=[64, 4, 2], epochs=50, init=InitSpec([(0, 20), (0, 60)], seed=1), seed=1, val_holdout=0)
    base.update(kw)
    return TrainConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        toy_config(eta=0)
    with pytest.raises(ConfigError):
        toy_config(epochs=0)
    with pytest.raises(ConfigError):
        toy_config(gamma=0)
    with pytest.raises(ConfigError):
        toy_config(init=InitSpec([(0, 1)]))
    with pytest.raises(ConfigError):
        toy_config(norm_ord=3)


def test_toy_quadrants_reach_full_train_accuracy(toy_set):
    params, history = train(toy_config(), toy_set)
    assert any(h.train_acc == 1.0 for h in history)
    assert evaluate(params, toy_set).accuracy == 1.0
    # unseen samples from the same two patterns
    assert evaluate(params, quadrant_images(40, 1)).accuracy >= 0.95


def test_fixed_seed_is_bitwise_deterministic(toy_set):
    cfg = toy_config(epochs=3)
    p1, h1 = train(cfg, toy_set)
    p2, h2 = train(cfg, toy_set)
    assert [h.to_record() for h in h1] == [h.to_record() for h in h2]
    for a, b in zip(p1.layers, p2.layers):
        assert a.weights.tobytes() == b.weights.tobytes()
    p3, _ = train(toy_config(epochs=3, seed=2, init=InitSpec([(0, 20), (0, 60)], seed=2)), toy_set)
    assert p3.layers[0].weights.tobytes() != p1.layers[0].weights.tobytes()


def test_epoch_stats_are_sane(toy_set):
    _, history = train(toy_config(epochs=2), toy_set, val_set=quadrant_images(10, 5), test_set=quadrant_images(10, 6))
    for h in history:
        assert 0 <= h.train_acc <= 1 and h.train_msse >= 0
        assert 0 <= h.val_acc <= 1 and h.val_msse >= 0
    assert history[0].test_acc is None and history[-1].test_acc is not None
    rec = history[-1].to_record()
    for key in ("epoch", "train_msse", "val_msse", "train_acc", "val_acc", "test_acc",
                "mean_decision_time", "mean_spikes", "revived"):
        assert key in rec


def test_all_silent_network_trains_without_crash(toy_set):
    cfg = toy_config(epochs=1)
    params = NetworkParams(
        [LayerParams(np.zeros((4, 64))), LayerParams(np.zeros((2, 4)))], cfg.grid
    )
    counter = FireCounter(params)
    stats = train_epoch(params, toy_set, cfg, 0, counter)
    # every sample hit the all-silent target branch: error -gamma/t_max on the correct neuron
    assert stats.train_msse == pytest.approx((3 / 256) ** 2)
    assert np.isfinite(stats.train_msse)
    # all six neurons were dead and got fresh weights from the init ranges
    assert stats.revived == 6
    assert any(layer.weights.any() for layer in params.layers)


def test_revival_invariant(toy_set):
    cfg = toy_config(epochs=1)
    params = cfg.build_network()
    # hidden neuron 2 can never fire: all its weights are negative
    params.layers[0].weights[2] = -1.0
    before = [l.weights.copy() for l in params.layers]
    counter = FireCounter(params)
    stats = train_epoch(params, toy_set, cfg, 0, counter)
    assert stats.revived >= 1
    for l, counts in enumerate(counter.counts):
        for j in np.flatnonzero(counts == 0):
            assert not np.array_equal(params.layers[l].weights[j], before[l][j])
    lo, hi = cfg.init.ranges[0]
    assert ((params.layers[0].weights[2] >= lo) & (params.layers[0].weights[2] <= hi)).all()


def test_revival_can_be_disabled(toy_set):
    cfg = toy_config(epochs=1, revive_dead=False, lam=0.0)
    params = cfg.build_network()
    params.layers[0].weights[2] = -1.0
    stats = train_epoch(params, toy_set, cfg, 0)
    assert stats.revived == 0
    assert (params.layers[0].weights[2] == -1.0).all()


def test_fire_counter_counts_real_spikes_only():
    net = NetworkParams([LayerParams(np.array([[10.0, 0.0], [0.0, 0.0]]), 5.0)], SimGrid(8))
    counter = FireCounter(net)
    for _ in range(3):
        counter.add(forward_network(SpikeVector.real([1, 2]), net, Mode.TRAIN))
    assert counter.counts[0].tolist() == [3, 0]
    assert counter.dead() == [(0, 1)]
    counter.reset()
    assert counter.counts[0].tolist() == [0, 0]


def test_divergence_is_reported(toy_set):
    cfg = toy_config(epochs=1, eta=1e308)
    params = cfg.build_network()
    with pytest.raises(DivergenceError):
        train_epoch(params, toy_set, cfg)


def test_shuffle_changes_order_only(toy_set):
    cfg = toy_config(epochs=1)
    seen = []
    import ttfsnet.trainer as trainer_mod

    real_step = trainer_mod.train_step

    def spy(params, x, label, c):
        seen.append((x.tobytes(), label))
        return real_step(params, x, label, c)

    trainer_mod.train_step = spy
    try:
        train_epoch(cfg.build_network(), toy_set, cfg)
    finally:
        trainer_mod.train_step = real_step
    x = encode_dataset(toy_set, cfg.grid)
    expected = sorted((row.tobytes(), int(l)) for row, l in zip(x, toy_set.labels))
    assert sorted(seen) == expected
    assert seen != [(row.tobytes(), int(l)) for row, l in zip(x, toy_set.labels)]


def trained_toy(toy_set):
    params, _ = train(toy_config(epochs=10), toy_set)
    return params


def test_evaluate_is_side_effect_free(toy_set):
    params = trained_toy(toy_set)
    before = [(l.weights.copy(), l.threshold) for l in params.layers]
    evaluate(params, toy_set, threshold=40.0, jitter=10, rng=3)
    sweep_threshold(params, toy_set, [50, 100])
    for (w, th), l in zip(before, params.layers):
        assert np.array_equal(w, l.weights) and th == l.threshold


def test_evaluate_metrics(toy_set):
    params = trained_toy(toy_set)
    s = evaluate(params, toy_set, gamma=3)
    n_neurons = sum(params.arch)
    assert 0 <= s.mean_spikes <= n_neurons
    assert 0 <= s.mean_decision_time <= params.grid.t_max
    assert len(s.class_correct_time) == 2 and s.msse >= 0
    assert 0 <= s.decided_fraction <= 1


def test_zero_jitter_is_identity(toy_set):
    params = trained_toy(toy_set)
    assert evaluate(params, toy_set, jitter=0, rng=5) == evaluate(params, toy_set)


def test_jitter_is_seeded(toy_set):
    params = trained_toy(toy_set)
    a = evaluate(params, toy_set, jitter=60, rng=11)
    b = evaluate(params, toy_set, jitter=60, rng=11)
    assert a == b


def test_reference_engine_agrees(toy_set):
    params = trained_toy(toy_set)
    assert np.array_equal(predict(params, toy_set), predict(params, toy_set, engine="reference"))
    assert evaluate(params, toy_set) == evaluate(params, toy_set, engine="reference")
    with pytest.raises(ConfigError):
        evaluate(params, toy_set, engine="gpu")


def test_sweep_rows(toy_set):
    params = trained_toy(toy_set)
    rows = sweep_threshold(params, toy_set, range(10, 151, 10))
    assert [t for t, _ in rows] == list(range(10, 151, 10))
    assert all(s.threshold == t for t, s in rows)
    with pytest.raises(ConfigError):
        sweep_threshold(params, toy_set, [0])


def test_silent_zeros_change_the_forward_pass():
    # the neuron needs the intensity-0 pixel to reach threshold
    layer = LayerParams(np.array([[1.0, 1.0]]), 2.0)
    x = encode_times(np.array([255, 0]), SimGrid(8))
    on = forward_network(input_spikes(x, SimGrid(8)), NetworkParams([layer], SimGrid(8)))
    off_grid = SimGrid(8, zero_fires=False)
    off = forward_network(input_spikes(x, off_grid), NetworkParams([layer], off_grid))
    assert on.output.times.tolist() == [8] and not on.output.fake[0]
    assert off.output.fake[0]


@pytest.mark.parametrize("flag", [False, True])
def test_fake_output_grad_reaches_silent_outputs(flag):
    cfg = toy_config(arch=[2, 1, 2], init=InitSpec([(0, 1), (0, 1)]), fake_output_grad=flag, lam=0.0)
    params = NetworkParams(
        [LayerParams(np.array([[5.0, 5.0]]), 4.0), LayerParams(np.array([[5.0], [1.0]]), 4.0)], SimGrid(16)
    )
    before = params.layers[1].weights.copy()
    # output 1 never fires; it is the correct class
    train_step(params, np.array([1, 3]), 1, cfg)
    changed = params.layers[1].weights[1] != before[1]
    assert bool(changed[0]) is flag


def test_keep_best_returns_best_validation_epoch(toy_set):
    val = quadrant_images(10, 5)
    cfg = toy_config(epochs=6, keep_best=True)
    params, history = train(cfg, toy_set, val_set=val)
    accs = [h.val_acc for h in history]
    best = accs.index(max(accs))
    replay, _ = train(toy_config(epochs=best + 1), toy_set, val_set=val)
    for a, b in zip(params.layers, replay.layers):
        assert a.weights.tobytes() == b.weights.tobytes()

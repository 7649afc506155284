import numpy as np
import pytest

from amicable import datagen
from amicable import tensorgrad as tg
from amicable.dsp import WaveBuffer
from amicable.metrics import sdr
from amicable.separator import (SeparatorModel, TrainConfig, TrainDivergedError,
                                forward, forward_tensors, init_model, load_model,
                                mask_matrix, save_model, separation_mse_tensor, train)
from amicable.tensorgrad import Tape, Tensor, backward


def _zeroed(model):
    m = model.copy()
    for k in m.params:
        m.params[k] = np.zeros_like(m.params[k])
    return m


def test_zero_parameter_mlp_passes_half_signal():
    model = _zeroed(init_model("mask-mlp", seed=0))
    rng = np.random.default_rng(1)
    x = WaveBuffer(rng.uniform(-0.5, 0.5, 4000), 8000)
    for est in forward(model, x):
        assert np.max(np.abs(est.samples - 0.5 * x.samples)) < 1e-6


def test_zero_input_gives_zero_estimates():
    model = init_model("mask-mlp", seed=2)
    x = WaveBuffer(np.zeros(4000), 8000)
    for est in forward(model, x):
        assert np.max(np.abs(est.samples)) == 0.0


def test_forward_output_count_and_length():
    model = init_model("mask-linear", seed=4)
    x = WaveBuffer(np.random.default_rng(5).uniform(-0.3, 0.3, 5000), 8000)
    ests = forward(model, x)
    assert len(ests) == model.n_sources
    for est in ests:
        assert len(est) == len(x)


def test_forward_rejects_sample_rate_mismatch():
    model = init_model("mask-mlp", seed=6)
    with pytest.raises(ValueError, match="sample rate"):
        forward(model, WaveBuffer(np.zeros(4000) + 0.1, 44100))


def test_forward_rejects_short_input():
    model = init_model("mask-mlp", seed=7)
    with pytest.raises(ValueError, match="shorter"):
        forward(model, WaveBuffer(np.ones(100) * 0.1, 8000))


def test_masks_are_open_unit_interval_and_bound_magnitude(trained_tiny, tiny_eval_track):
    from amicable import dsp
    masks = mask_matrix(trained_tiny, tiny_eval_track.mixture)
    assert np.all(masks > 0.0) and np.all(masks < 1.0)
    spec = np.abs(dsp.stft(tiny_eval_track.mixture).values)
    bins = trained_tiny.n_bins
    for i in range(trained_tiny.n_sources):
        masked = masks[:, i * bins:(i + 1) * bins] * spec
        assert np.all(masked <= spec)


def test_overfit_single_item_ten_fold_loss_drop():
    item = datagen.gen_track(1000, duration=2.0)
    model = init_model("mask-mlp", seed=8)
    cfg = TrainConfig(epochs=80, learning_rate=5000.0, batch_size=1, seed=8)
    _, curve = train(model, [item], cfg)
    assert curve[-1] < curve[0] / 10.0


def test_zero_epochs_leaves_parameters_untouched(tiny_train_corpus):
    model = init_model("mask-mlp", seed=9)
    before = {k: v.tobytes() for k, v in model.params.items()}
    trained, curve = train(model, tiny_train_corpus,
                           TrainConfig(epochs=0, learning_rate=1.0, batch_size=2, seed=9))
    assert curve == []
    assert {k: v.tobytes() for k, v in trained.params.items()} == before


def test_training_is_deterministic(tiny_train_corpus):
    def run():
        model = init_model("mask-mlp", seed=10)
        cfg = TrainConfig(epochs=3, learning_rate=500.0, batch_size=2, seed=10)
        trained, curve = train(model, tiny_train_corpus, cfg)
        return trained, curve

    m1, c1 = run()
    m2, c2 = run()
    assert c1 == c2
    for k in m1.params:
        assert np.array_equal(m1.params[k], m2.params[k])


def test_different_seeds_give_different_models(tiny_train_corpus):
    cfg = TrainConfig(epochs=2, learning_rate=500.0, batch_size=2, seed=0)
    a, _ = train(init_model("mask-mlp", seed=1), tiny_train_corpus, cfg)
    b, _ = train(init_model("mask-mlp", seed=2), tiny_train_corpus, cfg)
    dist = sum(float(np.sum((a.params[k] - b.params[k]) ** 2)) for k in a.params)
    assert dist > 0.0


def test_trained_model_beats_passthrough(trained_tiny, tiny_eval_track):
    baseline = _zeroed(trained_tiny)
    tr = tiny_eval_track
    trained_sdr = [sdr(s, e) for s, e in zip(tr.sources, forward(trained_tiny, tr.mixture))]
    passthrough_sdr = [sdr(s, e) for s, e in zip(tr.sources, forward(baseline, tr.mixture))]
    assert np.mean(trained_sdr) > np.mean(passthrough_sdr) + 3.0


def test_train_rejects_empty_dataset():
    model = init_model("mask-mlp", seed=11)
    with pytest.raises(ValueError, match="empty"):
        train(model, [], TrainConfig(epochs=1, learning_rate=1.0, batch_size=1, seed=0))


def test_train_rejects_inconsistent_items():
    tr = datagen.gen_track(1001, duration=1.0)
    broken = datagen.SynthTrack.__new__(datagen.SynthTrack)
    broken.track_id = "broken"
    broken.seed = 0
    broken.sample_rate = tr.sample_rate
    broken.duration = tr.duration
    broken.sources = tr.sources
    broken.mixture = WaveBuffer(tr.mixture.samples + 0.01, tr.sample_rate)
    model = init_model("mask-mlp", seed=12)
    with pytest.raises(ValueError, match="sum to the mixture"):
        train(model, [broken], TrainConfig(epochs=1, learning_rate=1.0, batch_size=1, seed=0))


def test_train_divergence_names_epoch(tiny_train_corpus):
    model = init_model("mask-linear", seed=13)
    model.params["w"] = model.params["w"] * 0 + 1e308  # overflow in first forward
    cfg = TrainConfig(epochs=5, learning_rate=1.0, batch_size=4, seed=13)
    with pytest.raises(TrainDivergedError, match="epoch 0"):
        train(model, tiny_train_corpus, cfg)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1, learning_rate=1.0, batch_size=1, seed=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, learning_rate=0.0, batch_size=1, seed=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, learning_rate=1.0, batch_size=0, seed=0)


def test_parameter_gradients_pass_grad_check(small_geometry_model, small_geometry_track):
    x, ys = small_geometry_track
    model = small_geometry_model.copy()
    # nudge off the symmetric zero-bias init point where several loss
    # gradients vanish and finite differences lose all relative accuracy
    prng = np.random.default_rng(103)
    for k in model.params:
        model.params[k] = model.params[k] + 0.05 * prng.standard_normal(model.params[k].shape)

    for pname in model.params:
        def loss_of(pt, pname=pname):
            tensors = {k: (pt if k == pname else Tensor.const(v))
                       for k, v in model.params.items()}
            ests = forward_tensors(model, Tensor.const(x), tensors)
            return separation_mse_tensor(ests, ys)

        err = tg.grad_check(loss_of, model.params[pname], 1e-4)
        assert err < 1e-4, f"{pname}: {err}"


def test_checkpoint_round_trip(tmp_path, trained_tiny):
    path = tmp_path / "model.json"
    save_model(trained_tiny, path)
    back = load_model(path)
    assert back.arch == trained_tiny.arch
    assert back.n_sources == trained_tiny.n_sources
    assert (back.window_size, back.hop) == (trained_tiny.window_size, trained_tiny.hop)
    for k, v in trained_tiny.params.items():
        assert np.array_equal(back.params[k], v)


def test_checkpoint_missing_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "absent.json")


def test_checkpoint_bad_format_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(ValueError, match="format"):
        load_model(path)


def test_unknown_arch_rejected():
    with pytest.raises(ValueError, match="arch"):
        init_model("transformer", seed=0)
    with pytest.raises(ValueError, match="arch"):
        SeparatorModel("cnn", 2, 512, 256, 8000, {})

import numpy as np
import pytest

from amicable import datagen, separator
from amicable.separator import TrainConfig, init_model, train


@pytest.fixture(scope="session")
def tiny_train_corpus():
    return datagen.gen_corpus(4, base_seed=datagen.TRAIN_BASE_SEED, duration=3.0)


@pytest.fixture(scope="session")
def tiny_eval_track():
    return datagen.gen_track(datagen.EVAL_BASE_SEED, duration=3.0)


@pytest.fixture(scope="session")
def trained_tiny(tiny_train_corpus):
    """mask-mlp trained enough to separate clearly better than chance."""
    model = init_model("mask-mlp", seed=42)
    cfg = TrainConfig(epochs=30, learning_rate=1000.0, batch_size=4, seed=42)
    model, curve = train(model, tiny_train_corpus, cfg)
    assert curve[-1] < curve[0]
    return model


@pytest.fixture(scope="session")
def small_geometry_model():
    """Untrained mask-mlp on a 64-sample window for cheap gradient checks."""
    return init_model("mask-mlp", seed=3, window_size=64, hop=32)


@pytest.fixture(scope="session")
def small_geometry_track():
    """Short synthetic mixture matching the 64-sample-window models."""
    rng = np.random.default_rng(17)
    n = 256
    t = np.arange(n) / 8000.0
    y1 = 0.5 * np.sin(2 * np.pi * 500 * t) + 0.2 * np.sin(2 * np.pi * 1100 * t)
    y2 = 0.3 * rng.standard_normal(n)
    return y1 + y2, [y1, y2]

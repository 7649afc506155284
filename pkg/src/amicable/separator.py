"""Toy differentiable mask-based separation models and their trainer.

Both architectures estimate one sigmoid mask per source per STFT frame
from the frame magnitude vector, apply it to the complex spectrogram,
and resynthesize. ``mask-mlp`` uses one 64-unit hidden layer; while
``mask-linear`` is a plain affine map. Frame-wise processing (no temporal
context) keeps the autodiff tape small.

Checkpoint format (JSON, stable): see ``save_model``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from . import tensorgrad as tg
from .dsp import WaveBuffer
from .tensorgrad import Tape, Tensor, backward

__all__ = [
    "SeparatorModel",
    "TrainConfig",
    "TrainDivergedError",
    "init_model",
    "forward",
    "forward_tensors",
    "mask_matrix",
    "train",
    "save_model",
    "load_model",
    "separation_mse_tensor",
]

ARCHS = ("mask-mlp", "mask-linear")
HIDDEN_UNITS = 64
CHECKPOINT_FORMAT = "amicable-separator-v1"

# gradient-safe floor for magnitudes on silent bins, and a fixed feature
# scale keeping typical frame magnitudes inside the sigmoids' active range
_MAG_EPS = 1e-12
_FEAT_SCALE = 0.25


class TrainDivergedError(RuntimeError):
    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}" +
                         (f": {detail}" if detail else ""))


@dataclass
class SeparatorModel:
    arch: str
    n_sources: int
    window_size: int
    hop: int
    sample_rate: int
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"unknown arch '{self.arch}' (choose from {ARCHS})")
        for name, arr in self.params.items():
            self.params[name] = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(self.params[name])):
                raise ValueError(f"parameter '{name}' contains non-finite values")

    @property
    def n_bins(self) -> int:
        return self.window_size // 2 + 1

    def copy(self) -> "SeparatorModel":
        return SeparatorModel(self.arch, self.n_sources, self.window_size, self.hop,
                              self.sample_rate, copy.deepcopy(self.params))


@dataclass
class TrainConfig:
    epochs: int
    learning_rate: float
    batch_size: int
    seed: int

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate and batch_size must be positive")


def init_model(arch: str, seed: int, n_sources: int = 2,
               window_size: int = dsp.DEFAULT_WINDOW, hop: int = dsp.DEFAULT_HOP,
               sample_rate: int = dsp.DEFAULT_SAMPLE_RATE) -> SeparatorModel:
    rng = np.random.default_rng(seed)
    bins = window_size // 2 + 1
    out = n_sources * bins
    if arch == "mask-mlp":
        params = {
            "w1": rng.standard_normal((bins, HIDDEN_UNITS)) / np.sqrt(bins),
            "b1": np.zeros(HIDDEN_UNITS),
            "w2": rng.standard_normal((HIDDEN_UNITS, out)) / np.sqrt(HIDDEN_UNITS),
            "b2": np.zeros(out),
        }
    elif arch == "mask-linear":
        params = {
            "w": rng.standard_normal((bins, out)) / np.sqrt(bins),
            "b": np.zeros(out),
        }
    else:
        raise ValueError(f"unknown arch '{arch}' (choose from {ARCHS})")
    return SeparatorModel(arch, n_sources, window_size, hop, sample_rate, params)


def _mask_logits(model: SeparatorModel, feat: Tensor, p: dict[str, Tensor]) -> Tensor:
    if model.arch == "mask-mlp":
        hidden = tg.sigmoid(tg.add_rowvec(tg.matmul(feat, p["w1"]), p["b1"]))
        return tg.add_rowvec(tg.matmul(hidden, p["w2"]), p["b2"])
    return tg.add_rowvec(tg.matmul(feat, p["w"]), p["b"])


def forward_tensors(model: SeparatorModel, x: Tensor,
                    param_tensors: dict[str, Tensor] | None = None) -> list[Tensor]:
    """N waveform estimates, differentiable w.r.t. the input and parameters."""
    out_len = x.data.size
    if out_len < model.window_size:
        raise ValueError(f"input length {out_len} shorter than window {model.window_size}")
    p = param_tensors or {k: Tensor.const(v) for k, v in model.params.items()}
    re, im = dsp.stft_tensor(x, model.window_size, model.hop)
    mag = tg.sqrt(tg.add(tg.add(tg.square(re), tg.square(im)), _MAG_EPS))
    feat = tg.scale(mag, _FEAT_SCALE)
    masks = tg.sigmoid(_mask_logits(model, feat, p))
    bins = model.n_bins
    estimates = []
    for i in range(model.n_sources):
        m = tg.slice_axis(masks, i * bins, (i + 1) * bins, axis=1)
        est = dsp.istft_tensor(tg.mul(m, re), tg.mul(m, im), out_len,
                               model.window_size, model.hop)
        estimates.append(est)
    return estimates


def forward(model: SeparatorModel, w: WaveBuffer) -> list[WaveBuffer]:
    """Inference on a WaveBuffer (no gradient tracking)."""
    if w.sample_rate != model.sample_rate:
        raise ValueError(f"sample rate {w.sample_rate} != model rate {model.sample_rate}")
    ests = forward_tensors(model, Tensor.const(w.samples))
    return [WaveBuffer(e.data, w.sample_rate) for e in ests]


def mask_matrix(model: SeparatorModel, w: WaveBuffer) -> np.ndarray:
    """(frames, n_sources*bins) mask values for inspection/testing."""
    re, im = dsp.stft_tensor(Tensor.const(w.samples), model.window_size, model.hop)
    mag = tg.sqrt(tg.add(tg.add(tg.square(re), tg.square(im)), _MAG_EPS))
    feat = tg.scale(mag, _FEAT_SCALE)
    p = {k: Tensor.const(v) for k, v in model.params.items()}
    return tg.sigmoid(_mask_logits(model, feat, p)).data


def separation_mse_tensor(estimates: list[Tensor], targets: list[np.ndarray]) -> Tensor:
    """Squared error summed over sources and samples, over the total count."""
    if len(estimates) != len(targets):
        raise ValueError("estimate/target count mismatch")
    total = None
    count = 0
    for est, ref in zip(estimates, targets):
        term = tg.ssum(tg.square(tg.sub(est, Tensor.const(ref))))
        total = term if total is None else tg.add(total, term)
        count += int(np.asarray(ref).size)
    return tg.scale(total, 1.0 / count)


def _validate_dataset(dataset) -> None:
    if not dataset:
        raise ValueError("dataset is empty")
    for item in dataset:
        total = np.zeros(len(item.mixture))
        for s in item.sources:
            total = total + s.samples
        if np.max(np.abs(total - item.mixture.samples)) > 1e-6:
            raise ValueError(f"item {item.track_id}: sources do not sum to the mixture")


def train(model: SeparatorModel, dataset, cfg: TrainConfig) -> tuple[SeparatorModel, list[float]]:
    """Mini-batch gradient descent on waveform l2; returns (model, loss curve).

    Deterministic given cfg.seed; raises TrainDivergedError naming the
    epoch if the loss goes non-finite.
    """
    _validate_dataset(dataset)
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    curve: list[float] = []
    n = len(dataset)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = [dataset[i] for i in order[start:start + cfg.batch_size]]
            tape = Tape()
            try:
                leaves = {k: tape.leaf(v) for k, v in model.params.items()}
                batch_loss = None
                for item in batch:
                    ests = forward_tensors(model, Tensor.const(item.mixture.samples), leaves)
                    item_loss = separation_mse_tensor(ests, [s.samples for s in item.sources])
                    batch_loss = item_loss if batch_loss is None else tg.add(batch_loss, item_loss)
                batch_loss = tg.scale(batch_loss, 1.0 / len(batch))
                value = batch_loss.item()
                grads = backward(batch_loss)
            except tg.TensorError as exc:
                raise TrainDivergedError(epoch, str(exc)) from exc
            if not np.isfinite(value):
                raise TrainDivergedError(epoch)
            for k, leaf in leaves.items():
                model.params[k] = model.params[k] - cfg.learning_rate * grads[leaf].data
            epoch_loss += value * len(batch)
        curve.append(epoch_loss / n)
    return model, curve


# ---------------------------------------------------------------------------
# checkpoint I/O


def save_model(model: SeparatorModel, path) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "arch": model.arch,
        "n_sources": model.n_sources,
        "window_size": model.window_size,
        "hop": model.hop,
        "sample_rate": model.sample_rate,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in sorted(model.params.items())
        },
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")
    tmp.replace(path)


def load_model(path) -> SeparatorModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unknown checkpoint format {payload.get('format')!r}")
    params = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    return SeparatorModel(payload["arch"], payload["n_sources"], payload["window_size"],
                          payload["hop"], payload["sample_rate"], params)

"""Perturbation learning: short-term power-ratio constraint, single- and
multi-model losses, and the Adam-driven optimization loop.

A perturbation nu is optimized so that each separation model's output on
x+nu moves toward (positive weight) or away from (negative weight) the true
sources, while the short-term power ratio keeps nu small relative to the
mixture patch by patch. Positive-weight models receive an "amicable"
perturbation, negative-weight models an adversarial one, from the same nu.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import tensorgrad as tg
from .dsp import WaveBuffer, rms, write_wav
from .metrics import di_sdr
from .separator import SeparatorModel, forward_tensors, separation_mse_tensor
from .tensorgrad import Tape, Tensor, backward

__all__ = [
    "AdamConfig",
    "AdamState",
    "PerturbJob",
    "PerturbResult",
    "PerturbDivergedError",
    "stpr",
    "stpr_floor",
    "separation_term",
    "amicable_loss",
    "mmpl_loss",
    "adam_step",
    "optimize",
    "save_perturb_result",
    "DEFAULT_LAMBDA",
    "LAMBDA_GRID",
    "DEFAULT_ITERATIONS",
    "DEFAULT_EPSILON",
    "DEFAULT_PATCH_LEN",
]

log = logging.getLogger("amicable.perturb")

# lambda scale follows from the loss normalizations: the separation term is
# a per-sample mean while the power-ratio sum grows with track length, so
# the balanced regime for 10 s clips sits in the 1e-6 decade (see README)
DEFAULT_LAMBDA = 7e-6
LAMBDA_GRID = (2e-6, 4e-6, 7e-6, 1.2e-5, 2e-5)
DEFAULT_ITERATIONS = 300
DEFAULT_EPSILON = 0.01
DEFAULT_PATCH_LEN = 256     # 32 ms at 8 kHz


class PerturbDivergedError(RuntimeError):
    def __init__(self, iteration: int, detail: str = ""):
        self.iteration = iteration
        super().__init__(f"optimization diverged (non-finite loss) at iteration {iteration}" +
                         (f": {detail}" if detail else ""))


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @staticmethod
    def zeros(n: int) -> "AdamState":
        return AdamState(np.zeros(n), np.zeros(n), 0)


def adam_step(state: AdamState, grad: np.ndarray, lr: float, beta1: float,
              beta2: float, eps: float) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns (new state, parameter delta)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.m.shape:
        raise ValueError(f"adam_step: gradient shape {grad.shape} != state shape {state.m.shape}")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    delta = -lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(m, v, t), delta


@dataclass
class PerturbJob:
    models: list[SeparatorModel]
    alphas: list[float]
    lam: float = DEFAULT_LAMBDA
    epsilon: float = DEFAULT_EPSILON
    iterations: int = DEFAULT_ITERATIONS
    patch_len: int = DEFAULT_PATCH_LEN
    seed: int = 0
    adam: AdamConfig = field(default_factory=AdamConfig)

    def __post_init__(self):
        if not self.models or len(self.models) != len(self.alphas):
            raise ValueError("need the same (nonzero) number of models and alphas")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if self.patch_len <= 0:
            raise ValueError("patch_len must be positive")
        self.alphas = [float(a) for a in self.alphas]

    @property
    def amicable_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.alphas) if a > 0]

    @property
    def adversarial_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.alphas) if a < 0]

    def config_dict(self) -> dict:
        return {
            "alphas": self.alphas,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "patch_len": self.patch_len,
            "seed": self.seed,
            "adam": asdict(self.adam),
            "model_archs": [m.arch for m in self.models],
        }


@dataclass
class PerturbResult:
    nu: WaveBuffer
    loss_trace: np.ndarray
    stpr_value: float
    di_sdr: float
    converged: bool


def _samples(w) -> np.ndarray:
    if isinstance(w, WaveBuffer):
        return w.samples
    return np.asarray(w, dtype=np.float64)


def stpr_floor(x, patch_len: int) -> float:
    """Denominator guard for silent patches."""
    return 1e-8 * rms(_samples(x)) * np.sqrt(patch_len)


def _to_patches(arr: np.ndarray, patch_len: int) -> np.ndarray:
    pad = (-arr.size) % patch_len
    if pad:
        arr = np.concatenate([arr, np.zeros(pad)])
    return arr.reshape(-1, patch_len)


def stpr(nu, x, patch_len: int = DEFAULT_PATCH_LEN, floor: float | None = None) -> Tensor:
    """Short-term power ratio: l1 norm of patchwise ||nu_n|| / (||x_n|| + floor).

    ``nu`` may be a tracked tensor (the value is differentiable in it);
    ``x`` is always treated as a constant. The tail patch is zero-padded.
    ``floor=None`` selects the default guard; an explicit 0.0 disables it,
    in which case a silent mixture patch raises.
    """
    nu_t = nu if isinstance(nu, Tensor) else Tensor.const(_samples(nu))
    x_arr = _samples(x)
    if nu_t.data.size != x_arr.size:
        raise ValueError(f"stpr: length mismatch {nu_t.data.size} vs {x_arr.size}")
    if not np.any(x_arr):
        raise ValueError("stpr: mixture is identically zero")
    if floor is None:
        floor = stpr_floor(x_arr, patch_len)

    x_norms = np.linalg.norm(_to_patches(x_arr, patch_len), axis=1)
    if floor == 0.0 and np.any(x_norms == 0.0):
        raise ValueError("stpr: silent mixture patch with the denominator floor disabled")

    pad = (-nu_t.data.size) % patch_len
    if pad:
        nu_t = tg.concat([nu_t, Tensor.const(np.zeros(pad))])
    patches = tg.reshape(nu_t, (x_norms.size, patch_len))
    ratios = tg.mul(tg.rownorm(patches), Tensor.const(1.0 / (x_norms + floor)))
    return tg.ssum(tg.absval(ratios))


def separation_term(model: SeparatorModel, x, y, nu: Tensor) -> Tensor:
    """Mean squared separation error d(f(x+nu), y) over sources and samples."""
    x_arr = _samples(x)
    targets = [_samples(s) for s in y]
    perturbed = tg.add(Tensor.const(x_arr), nu)
    estimates = forward_tensors(model, perturbed)
    return separation_mse_tensor(estimates, targets)


def amicable_loss(model: SeparatorModel, x, y, nu: Tensor, lam: float,
                  patch_len: int = DEFAULT_PATCH_LEN, floor: float | None = None) -> Tensor:
    """Separation term plus lambda times the short-term power ratio."""
    d = separation_term(model, x, y, nu)
    return tg.add(d, tg.scale(stpr(nu, x, patch_len, floor), float(lam)))


def mmpl_loss(job: PerturbJob, x, y, nu: Tensor) -> Tensor:
    """Signed, weighted multi-model loss plus the shared regularizer."""
    total = None
    for i, (model, alpha) in enumerate(zip(job.models, job.alphas)):
        try:
            term = tg.scale(separation_term(model, x, y, nu), alpha)
        except tg.TensorError as exc:
            raise tg.TensorError(f"model {i} ({model.arch}): {exc}") from exc
        total = term if total is None else tg.add(total, term)
    return tg.add(total, tg.scale(stpr(nu, x, job.patch_len), job.lam))


def optimize(job: PerturbJob, x, y) -> PerturbResult:
    """Run `job.iterations` Adam steps on the multi-model loss.

    The loss trace holds the loss at each iterate plus the final value;
    `converged` flags whether the final loss beat the initial one.
    """
    x_arr = _samples(x)
    sr = x.sample_rate if isinstance(x, WaveBuffer) else 0
    targets = [_samples(s) for s in y]
    residual = x_arr - np.sum(targets, axis=0)
    if np.max(np.abs(residual)) > 1e-6:
        log.warning("mixture differs from source sum by up to %.3g", np.max(np.abs(residual)))

    rng = np.random.default_rng(job.seed)
    nu = rng.uniform(-job.epsilon, job.epsilon, x_arr.size)
    state = AdamState.zeros(x_arr.size)
    trace = np.zeros(job.iterations + 1)
    for it in range(job.iterations):
        tape = Tape()
        nu_t = tape.leaf(nu)
        try:
            loss = mmpl_loss(job, x_arr, targets, nu_t)
            value = loss.item()
            grad = backward(loss)[nu_t].data
        except tg.TensorError as exc:
            raise PerturbDivergedError(it, str(exc)) from exc
        trace[it] = value
        state, delta = adam_step(state, grad, job.adam.lr, job.adam.beta1,
                                 job.adam.beta2, job.adam.eps)
        nu = nu + delta

    final_loss = mmpl_loss(job, x_arr, targets, Tensor.const(nu)).item()
    trace[-1] = final_loss
    converged = bool(final_loss <= trace[0])
    if not converged:
        log.warning("final loss %.6g did not improve on initial %.6g", final_loss, trace[0])
    return PerturbResult(
        nu=WaveBuffer(nu, sr or 1),
        loss_trace=trace,
        stpr_value=stpr(Tensor.const(nu), x_arr, job.patch_len).item(),
        di_sdr=di_sdr(x_arr, nu),
        converged=converged,
    )


def save_perturb_result(result: PerturbResult, job: PerturbJob, out_dir, track_id: str) -> None:
    """float-32 WAV of nu plus a JSON sidecar with trace and job config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_wav(out_dir / f"{track_id}_nu.wav", result.nu, bit_depth=32)
    sidecar = {
        "track_id": track_id,
        "loss_trace": [float(v) for v in result.loss_trace],
        "stpr": result.stpr_value,
        "di_sdr": result.di_sdr,
        "converged": result.converged,
        "seed": job.seed,
        "job_config": job.config_dict(),
    }
    path = out_dir / f"{track_id}_nu.json"
    tmp = path.with_suffix(".json.tmp")
    with open(tmp, "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")
    tmp.replace(path)
